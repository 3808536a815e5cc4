"""Extraction manifests: one JSON file drives a full sidecar run."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

from .errors import ManifestError

REQUIRED_OUTPUTS = ("text_features", "image_features", "expert_features",
                    "mention_features", "entity_embeddings")


@dataclass
class ExtractionManifest:
    """Paths and encoder identifiers for one extraction run.

    ``truncation_budget`` caps entity representation length (characters)
    before encoding; None means the encoder's own limit applies.
    """

    images_dir: str
    samples_in: str
    entities_in: str
    samples_out: str
    outputs: dict[str, str]
    text_encoder: str = "hash-text"
    image_encoder: str = "hash-image"
    expert_encoder: str = "template-expert"
    truncation_budget: int | None = None
    errors_out: str | None = None

    def __post_init__(self):
        missing = [name for name in REQUIRED_OUTPUTS if name not in self.outputs]
        if missing:
            raise ManifestError(f"manifest outputs missing {missing}")
        unknown = [name for name in self.outputs if name not in REQUIRED_OUTPUTS]
        if unknown:
            raise ManifestError(f"manifest outputs has unknown keys {unknown}")
        if self.truncation_budget is not None and self.truncation_budget < 1:
            raise ManifestError(
                f"truncation_budget must be >= 1 or null, got {self.truncation_budget}")
        for label, path in (("images_dir", self.images_dir),
                            ("samples_in", self.samples_in),
                            ("entities_in", self.entities_in)):
            if not os.path.exists(path):
                raise ManifestError(f"{label} does not exist: {path}")


def load_manifest(path: str) -> ExtractionManifest:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ManifestError(f"{path}: manifest must be a JSON object")
    known = set(ExtractionManifest.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        raise ManifestError(f"{path}: unknown manifest keys {sorted(unknown)}")
    base = os.path.dirname(os.path.abspath(path))

    def resolve(value: str) -> str:
        return value if os.path.isabs(value) else os.path.join(base, value)

    for key in ("images_dir", "samples_in", "entities_in", "samples_out", "errors_out"):
        if raw.get(key):
            raw[key] = resolve(raw[key])
    if "outputs" in raw and isinstance(raw["outputs"], dict):
        raw["outputs"] = {k: resolve(v) for k, v in raw["outputs"].items()}
    try:
        return ExtractionManifest(**raw)
    except TypeError as exc:
        raise ManifestError(f"{path}: {exc}") from exc
