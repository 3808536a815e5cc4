"""Command-line driver: one manifest in, the engine's files out."""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import EncoderLoadError, ExtractorError
from .manifest import load_manifest
from .pipeline import run_manifest


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="melextract",
        description="Encode text/images into the entity-linking engine's file formats.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="execute an extraction manifest")
    p.add_argument("--manifest", required=True, help="manifest JSON path")
    p.add_argument("--dim", type=int, default=512, help="output vector width")
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        manifest = load_manifest(args.manifest)
        result = run_manifest(manifest, dim=args.dim)
    except EncoderLoadError as exc:
        sys.stderr.write(f"error: EncoderLoadError: {exc}\n")
        return 3
    except (ExtractorError, OSError) as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return 1
    logging.getLogger("melextract").info(
        "encoded %d samples and %d entities (%d image errors)",
        result.samples, result.entities, len(result.image_errors))
    return 0


def entry() -> None:
    raise SystemExit(main())
