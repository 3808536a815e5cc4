"""Cosine ranking of fused features against candidates and top-k accuracy.

Tie handling is pessimistic by default: a non-gold candidate whose similarity
exactly equals the gold's pushes the gold down one rank.  This keeps reported
accuracies honest when degenerate embeddings collapse similarities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import DatasetBundle
from .errors import DataError, DomainError, EvaluationError
from .fusion import AttentionParams, forward

__all__ = [
    "RankResult",
    "EvalReport",
    "rank_of_gold",
    "topk_accuracy",
    "evaluate",
    "format_report",
    "write_report",
]

DEFAULT_KS = (1, 5, 10, 20)
TIE_POLICIES = ("pessimistic", "optimistic")


@dataclass(frozen=True)
class RankResult:
    """Where the gold entity landed for one sample."""

    sample_id: str
    gold_rank: int
    candidate_count: int
    gold_similarity: float

    def __post_init__(self):
        if not 1 <= self.gold_rank <= self.candidate_count:
            raise EvaluationError(
                f"rank {self.gold_rank} outside [1, {self.candidate_count}] "
                f"for sample {self.sample_id!r}")


@dataclass(frozen=True)
class EvalReport:
    """Top-k accuracies plus the per-sample ranks they were computed from."""

    accuracies: dict[int, float]
    sample_count: int
    results: tuple[RankResult, ...]


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    na = float(np.sqrt(a @ a))
    nb = float(np.sqrt(b @ b))
    if na == 0.0 or nb == 0.0:
        raise DomainError("cosine similarity of a zero-norm vector is undefined")
    return min(1.0, max(-1.0, float(a @ b) / (na * nb)))


def rank_of_gold(fused: np.ndarray, gold_id: str,
                 candidates: list[tuple[str, np.ndarray]],
                 sample_id: str = "", tie_policy: str = "pessimistic") -> RankResult:
    """Rank the gold entity among the candidates by cosine to the fused feature.

    Pessimistic ties count equal-similarity non-gold candidates ahead of the
    gold; the optimistic policy counts only strictly better ones.
    """
    if tie_policy not in TIE_POLICIES:
        raise EvaluationError(f"unknown tie policy {tie_policy!r}")
    fused = np.asarray(fused, dtype=np.float64).reshape(-1)
    gold_sim = None
    others: list[float] = []
    for entity_id, emb in candidates:
        sim = _cosine(fused, np.asarray(emb, dtype=np.float64).reshape(-1))
        if entity_id == gold_id:
            if gold_sim is not None:
                raise EvaluationError(f"gold entity {gold_id!r} appears twice in candidates")
            gold_sim = sim
        else:
            others.append(sim)
    if gold_sim is None:
        raise EvaluationError(f"gold entity {gold_id!r} is not among the candidates")
    if tie_policy == "pessimistic":
        ahead = sum(1 for s in others if s >= gold_sim)
    else:
        ahead = sum(1 for s in others if s > gold_sim)
    return RankResult(
        sample_id=sample_id,
        gold_rank=1 + ahead,
        candidate_count=len(candidates),
        gold_similarity=gold_sim,
    )


def topk_accuracy(results: list[RankResult], ks: tuple[int, ...] = DEFAULT_KS) -> EvalReport:
    """Fraction of samples whose gold rank is within each cutoff k."""
    if not results:
        raise EvaluationError("cannot compute accuracy over zero results")
    if list(ks) != sorted(ks) or len(set(ks)) != len(ks):
        raise EvaluationError(f"k list must be strictly ascending, got {ks}")
    if any(k < 1 for k in ks):
        raise EvaluationError(f"every k must be >= 1, got {ks}")
    n = len(results)
    accuracies = {k: sum(1 for r in results if r.gold_rank <= k) / n for k in ks}
    return EvalReport(accuracies=accuracies, sample_count=n, results=tuple(results))


def evaluate(bundle: DatasetBundle, params: AttentionParams,
             ks: tuple[int, ...] = DEFAULT_KS, tie_policy: str = "pessimistic",
             with_mention: bool | None = None) -> EvalReport:
    """Rank every sample's gold entity among its candidate set.

    Pure function of its inputs: iteration follows sample file order and all
    arithmetic is deterministic, so repeated runs give identical reports.
    """
    if with_mention is None:
        with_mention = params.mention_proj is not None
    results: list[RankResult] = []
    for sample in bundle.samples:
        cand = bundle.candidate_set_for(sample)
        features = bundle.features.bundle_for(sample.id, with_mention=with_mention)
        fused = forward(features, params).fused.data[0]
        pairs = []
        for eid in cand.entity_ids:
            if eid not in bundle.entity_embeddings:
                raise DataError(f"no embedding for candidate entity {eid!r}")
            pairs.append((eid, bundle.entity_embeddings.vector(eid)))
        results.append(rank_of_gold(
            fused, sample.gold_entity_id, pairs,
            sample_id=sample.id, tie_policy=tie_policy))
    return topk_accuracy(results, ks)


def format_report(report: EvalReport, dataset_name: str = "dataset",
                  dump_ranks: bool = False) -> str:
    """Render a report as stable, diff-able text."""
    lines = [
        f"dataset: {dataset_name}",
        f"samples: {report.sample_count}",
        "ks: " + ",".join(str(k) for k in report.accuracies),
    ]
    for k, acc in report.accuracies.items():
        lines.append(f"T@{k} {acc:.6f}")
    if dump_ranks:
        lines.append("# sample_id\tgold_rank\tcandidate_count\tgold_similarity")
        for r in report.results:
            lines.append(f"{r.sample_id}\t{r.gold_rank}\t{r.candidate_count}\t"
                         f"{r.gold_similarity:.17g}")
    return "\n".join(lines) + "\n"


def write_report(report: EvalReport, path: str, dataset_name: str = "dataset",
                 dump_ranks: bool = False) -> None:
    from .data import _atomic_write_text

    _atomic_write_text(path, format_report(report, dataset_name, dump_ranks))
