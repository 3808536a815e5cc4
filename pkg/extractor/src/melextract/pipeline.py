"""The extraction passes: expert strings, feature files, entity embeddings.

The sidecar never fuses, trains, or ranks; it only turns encoder outputs
into the engine's file formats.  Per-image failures are recorded and the
run continues; encoder construction failures abort the run.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field

import numpy as np

from .encoders import make_expert, make_image_encoder, make_text_encoder
from .errors import RecordError
from .formats import (ENTITY_FIELDS, SAMPLE_FIELDS, assemble_expert_text,
                      read_records, write_embedding_file, write_records)
from .manifest import ExtractionManifest

log = logging.getLogger(__name__)


@dataclass
class ExtractionResult:
    samples: int = 0
    entities: int = 0
    image_errors: list[tuple[str, str]] = field(default_factory=list)


def encode_texts(encoder, texts: list[tuple[str, str]]) -> list[tuple[str, np.ndarray]]:
    """Encode (id, text) pairs; duplicate ids are rejected before encoding."""
    seen: set[str] = set()
    for key, _ in texts:
        if key in seen:
            raise RecordError(f"duplicate text id {key!r}")
        seen.add(key)
    return [(key, encoder.encode_text(text)) for key, text in texts]


def extract_text_embeddings(encoder, texts: list[tuple[str, str]], dim: int,
                            path: str) -> None:
    """One vector per id in the binary embedding layout."""
    write_embedding_file(encode_texts(encoder, texts), dim, path)


def describe_images(expert, image_paths: dict[str, str],
                    result: ExtractionResult) -> dict[str, tuple[str, str]]:
    """Caption + identity answer per image id; failures recorded, not fatal."""
    described: dict[str, tuple[str, str]] = {}
    for image_id in sorted(image_paths):
        path = image_paths[image_id]
        try:
            caption, answer = expert.describe(path)
        except Exception as exc:
            log.warning("image %s: %s", image_id, exc)
            result.image_errors.append((image_id, str(exc)))
            continue
        if not caption or not answer:
            result.image_errors.append((image_id, "empty expert output"))
            continue
        described[image_id] = (caption, answer)
    return described


def write_expert_fields(samples: list[dict], descriptions: dict[str, tuple[str, str]],
                        path: str) -> list[dict]:
    """Fill expert_c1/expert_c2 from the per-image descriptions and rewrite."""
    updated = []
    for sample in samples:
        image_id = sample["image_id"]
        if image_id not in descriptions:
            raise RecordError(
                f"sample {sample['id']!r}: no extraction output for image {image_id!r}")
        caption, answer = descriptions[image_id]
        merged = dict(sample)
        merged["expert_c1"] = caption
        merged["expert_c2"] = answer
        updated.append(merged)
    write_records(updated, SAMPLE_FIELDS, path)
    return updated


def run_manifest(manifest: ExtractionManifest, dim: int = 512) -> ExtractionResult:
    """Execute a full extraction: strings first, then every embedding file."""
    result = ExtractionResult()
    samples = read_records(manifest.samples_in, SAMPLE_FIELDS, "sample")
    entities = read_records(manifest.entities_in, ENTITY_FIELDS, "entity")
    result.samples = len(samples)
    result.entities = len(entities)

    text_encoder = make_text_encoder(manifest.text_encoder)
    image_encoder = make_image_encoder(manifest.image_encoder)
    expert = make_expert(manifest.expert_encoder)

    image_paths = {
        sample["image_id"]: os.path.join(manifest.images_dir, sample["image_id"])
        for sample in samples
    }
    descriptions = describe_images(expert, image_paths, result)
    if manifest.errors_out is not None:
        with open(manifest.errors_out, "w", encoding="utf-8") as fh:
            fh.write("".join(f"{image_id}\t{message}\n"
                             for image_id, message in result.image_errors))
    # the description pass is tolerant so every broken image gets reported,
    # but sample files are only written with full expert coverage
    updated = write_expert_fields(samples, descriptions, manifest.samples_out)

    budget = manifest.truncation_budget

    def clip_text(text: str) -> str:
        return text if budget is None else text[:budget]

    extract_text_embeddings(
        text_encoder, [(s["id"], clip_text(s["text"])) for s in updated],
        dim, manifest.outputs["text_features"])
    extract_text_embeddings(
        text_encoder,
        [(s["id"], assemble_expert_text(s["expert_c1"], s["expert_c2"])) for s in updated],
        dim, manifest.outputs["expert_features"])
    extract_text_embeddings(
        text_encoder, [(s["id"], s["mention"]) for s in updated],
        dim, manifest.outputs["mention_features"])
    extract_text_embeddings(
        text_encoder, [(e["id"], clip_text(e["representation"])) for e in entities],
        dim, manifest.outputs["entity_embeddings"])

    image_vectors = [
        (sample["id"], image_encoder.encode_image(image_paths[sample["image_id"]]))
        for sample in updated
    ]
    write_embedding_file(image_vectors, dim, manifest.outputs["image_features"])
    return result
