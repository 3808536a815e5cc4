"""Command-line pipeline: mockgen, candgen, train, eval, enhance, stats.

Every subcommand validates its inputs before creating any output file, logs
the resolved run configuration, and reports failures as a single
machine-parsable line on stderr (exit 1 for data/validation problems, exit 2
for usage errors).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .candidates import generate_candidates, read_candidate_sets, write_candidate_sets
from .config import RunConfig, resolve_config
from .data import compute_stats, read_entities, read_samples, write_entities
from .dataset import load_dataset, write_dataset
from .embfile import load_checkpoint, save_checkpoint
from .enhance import (ProviderConfig, enhance_entities, make_provider, read_script,
                      write_audit_log, write_raw_responses)
from .errors import ConfigurationError, FuselinkError
from .mockdata import mock_generate
from .ranking import evaluate, format_report, write_report
from .train import train_model, write_loss_curve

__all__ = ["main", "entry"]

log = logging.getLogger("fuselink")


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--dim", type=int, help="feature width (default 512)")
    parser.add_argument("--heads", type=int, help="attention heads (default 8)")
    parser.add_argument("--lr", dest="learning_rate", type=float,
                        help="learning rate (default 5e-5)")
    parser.add_argument("--batch-size", type=int, help="training batch size (default 64)")
    parser.add_argument("--epochs", type=int, help="training epochs (default 300)")
    parser.add_argument("--loss-mode", dest="loss_mode", choices=["standard", "paper"],
                        help="training objective variant")
    parser.add_argument("--seed", type=int, help="run seed (default 0)")
    parser.add_argument("--candidate-k", type=int, help="candidate set size (default 100)")
    parser.add_argument("--tie-policy", dest="tie_policy",
                        choices=["pessimistic", "optimistic"], help="ranking tie handling")
    parser.add_argument("--truncation-budget", type=int,
                        help="entity representation character cap")
    parser.add_argument("--fuse-mention", dest="fuse_mention", action="store_const",
                        const=True, help="add a projected mention term to the fusion")


_CONFIG_FLAG_NAMES = ("dim", "heads", "learning_rate", "batch_size", "epochs", "loss_mode",
                      "seed", "candidate_k", "tie_policy", "truncation_budget", "fuse_mention")


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    flag_values = {name: getattr(args, name, None) for name in _CONFIG_FLAG_NAMES}
    config = resolve_config(file_path=getattr(args, "config", None), flag_values=flag_values)
    log.info("resolved config: %s", config.describe())
    return config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fuselink",
        description="Multimodal entity linking pipeline over file-based encoder outputs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mockgen", help="generate a synthetic planted-solution dataset")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--samples", type=int, default=100, help="number of mention samples")
    p.add_argument("--entities", type=int, default=200, help="number of entities")
    p.add_argument("--noise", type=float, default=0.05,
                   help="gaussian noise scale on gold embeddings")
    p.add_argument("--candidates", type=int, default=100, help="candidate set size")
    _add_config_flags(p)

    p = sub.add_parser("candgen", help="generate candidate sets by fuzzy name matching")
    p.add_argument("--samples", required=True, help="samples.jsonl path")
    p.add_argument("--entities", required=True, help="entities.jsonl path")
    p.add_argument("--out", required=True, help="output candidates.jsonl path")
    p.add_argument("--no-inject-gold", action="store_true",
                   help="report honest retrieval recall instead of guaranteeing gold")
    _add_config_flags(p)

    p = sub.add_parser("train", help="train fusion weights on a dataset directory")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--out-dir", required=True, help="directory for checkpoints and loss curve")
    _add_config_flags(p)

    p = sub.add_parser("eval", help="rank gold entities and report top-k accuracy")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--candidates", required=True,
                   help="candidates.jsonl path (use DIR/candidates.jsonl for mockgen output)")
    p.add_argument("--checkpoint", required=True, help="trained checkpoint path")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--dataset-name", default="dataset", help="name recorded in the report")
    p.add_argument("--dump-ranks", action="store_true", help="append per-sample ranks")
    _add_config_flags(p)

    p = sub.add_parser("enhance", help="refresh entity representations through a provider")
    p.add_argument("--entities", required=True, help="entities.jsonl path")
    p.add_argument("--out", required=True, help="updated entities.jsonl path")
    p.add_argument("--provider", choices=["mock", "http"], default="mock")
    p.add_argument("--script", help="mock provider script (JSONL id/response)")
    p.add_argument("--endpoint", default="", help="chat-completion endpoint URL")
    p.add_argument("--model", default="gpt-3.5-turbo", help="model name sent to the endpoint")
    p.add_argument("--concurrency", type=int, default=4)
    p.add_argument("--max-retries", type=int, default=2)
    p.add_argument("--timeout", type=float, default=30.0)
    p.add_argument("--audit", help="write the per-entity audit log here")
    p.add_argument("--responses", help="write raw responses (JSONL) here")
    _add_config_flags(p)

    p = sub.add_parser("stats", help="dataset statistics (counts and mean lengths)")
    p.add_argument("--samples", required=True, help="samples.jsonl path")
    p.add_argument("--entities", required=True, help="entities.jsonl path")
    _add_config_flags(p)

    return parser


def _cmd_mockgen(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    bundle = mock_generate(
        seed=config.seed, n_samples=args.samples, n_entities=args.entities,
        dim=config.dim, noise_sigma=args.noise, n_candidates=args.candidates)
    write_dataset(bundle, args.out)
    log.info("wrote %d samples, %d entities to %s",
             len(bundle.samples), len(bundle.entities), args.out)
    return 0


def _cmd_candgen(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    entities = read_entities(args.entities)
    samples = read_samples(args.samples, entities=entities)
    sets = [
        generate_candidates(
            sample.mention, entities, config.candidate_k,
            gold_id=sample.gold_entity_id, inject_gold=not args.no_inject_gold,
            mention_id=sample.id)
        for sample in samples
    ]
    write_candidate_sets(sets, args.out)
    log.info("wrote %d candidate sets to %s", len(sets), args.out)
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    bundle = load_dataset(args.data, truncate_to=config.truncation_budget)
    result = train_model(
        bundle, epochs=config.epochs, batch_size=config.batch_size,
        learning_rate=config.learning_rate, seed=config.seed,
        loss_mode=config.loss_mode, dim=config.dim, heads=config.heads,
        fuse_mention=config.fuse_mention)
    os.makedirs(args.out_dir, exist_ok=True)
    save_checkpoint(result.params, os.path.join(args.out_dir, "checkpoint_final.ckpt"))
    save_checkpoint(result.best_params, os.path.join(args.out_dir, "checkpoint_best.ckpt"))
    write_loss_curve(result.epoch_losses, os.path.join(args.out_dir, "loss_curve.tsv"))
    last = result.epoch_losses[-1] if result.epoch_losses else float("nan")
    log.info("trained %d epochs (best at %d); final per-sample loss %.6f",
             len(result.epoch_losses), result.best_epoch, last)
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    bundle = load_dataset(args.data, with_candidates=False,
                          truncate_to=config.truncation_budget)
    bundle.candidates = {c.mention_id: c for c in read_candidate_sets(args.candidates)}
    params = load_checkpoint(args.checkpoint, expect_dim=bundle.features.dim)
    report = evaluate(bundle, params, tie_policy=config.tie_policy)
    if args.out:
        write_report(report, args.out, dataset_name=args.dataset_name,
                     dump_ranks=args.dump_ranks)
        log.info("wrote report to %s", args.out)
    else:
        sys.stdout.write(format_report(report, dataset_name=args.dataset_name,
                                       dump_ranks=args.dump_ranks))
    return 0


def _cmd_enhance(args: argparse.Namespace) -> int:
    _config_from_args(args)
    provider_config = ProviderConfig(
        kind=args.provider, endpoint=args.endpoint, model=args.model,
        max_retries=args.max_retries, concurrency=args.concurrency, timeout=args.timeout)
    script = None
    if args.provider == "mock":
        if not args.script:
            raise ConfigurationError("mock provider requires --script")
        script = read_script(args.script)
    entities = read_entities(args.entities)
    provider = make_provider(provider_config, script=script)
    updated, report, records = enhance_entities(entities, provider, provider_config)
    write_entities(updated, args.out)
    if args.audit:
        write_audit_log(records, args.audit)
    if args.responses:
        write_raw_responses(records, args.responses)
    for category, count in sorted(report.counts.items()):
        log.info("category %s: %d", category, count)
    log.info("enhanced %d of %d entities (%d kept original representations)",
             report.enhanced, report.total, report.fallback)
    return 0


def _cmd_stats(args: argparse.Namespace) -> int:
    _config_from_args(args)
    entities = read_entities(args.entities)
    samples = read_samples(args.samples, entities=entities)
    stats = compute_stats(samples, entities)
    sys.stdout.write(
        f"samples: {stats.sample_count}\n"
        f"entities: {stats.entity_count}\n"
        f"mentions: {stats.mention_count}\n"
        f"mean_text_words: {stats.mean_text_words:.6g}\n"
        f"mean_representation_chars: {stats.mean_representation_chars:.6g}\n")
    return 0


_COMMANDS = {
    "mockgen": _cmd_mockgen,
    "candgen": _cmd_candgen,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "enhance": _cmd_enhance,
    "stats": _cmd_stats,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except FuselinkError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return 1
    except OSError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return 1


def entry() -> None:
    raise SystemExit(main())
