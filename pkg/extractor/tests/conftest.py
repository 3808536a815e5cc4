"""Fixtures: synthetic images and record files for extraction runs."""

import json

import numpy as np
import pytest
from PIL import Image


def make_images(directory, count, size=(24, 24), seed=0):
    """Write ``count`` deterministic PNG images, returning their ids."""
    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    image_ids = []
    for i in range(count):
        pixels = rng.integers(0, 256, size=(size[1], size[0], 3), dtype=np.uint8)
        image_id = f"img{i:03d}.png"
        Image.fromarray(pixels, "RGB").save(directory / image_id)
        image_ids.append(image_id)
    return image_ids


def make_records(tmp_path, image_ids, n_entities=None):
    """Sample/entity JSONL files referencing the given images."""
    n = len(image_ids)
    n_entities = n_entities or n + 5
    samples = [
        {"id": f"s{i:03d}", "text": f"sentence number {i} mentioning Person {i}",
         "mention": f"Person {i}", "image_id": image_ids[i], "expert_c1": "",
         "expert_c2": "", "gold_entity_id": f"e{i:03d}"}
        for i in range(n)
    ]
    entities = [
        {"id": f"e{i:03d}", "name": f"Person {i}",
         "representation": f"Person {i} is a synthetic figure used for testing.",
         "representation_source": "original"}
        for i in range(n_entities)
    ]
    samples_path = tmp_path / "samples.jsonl"
    entities_path = tmp_path / "entities.jsonl"
    samples_path.write_text(
        "".join(json.dumps(s, ensure_ascii=False) + "\n" for s in samples),
        encoding="utf-8")
    entities_path.write_text(
        "".join(json.dumps(e, ensure_ascii=False) + "\n" for e in entities),
        encoding="utf-8")
    return samples_path, entities_path


def make_manifest(tmp_path, images_dir, samples_path, entities_path, out_dir,
                  **overrides):
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "images_dir": str(images_dir),
        "samples_in": str(samples_path),
        "entities_in": str(entities_path),
        "samples_out": str(out_dir / "samples.jsonl"),
        "outputs": {
            "text_features": str(out_dir / "text_features.emb"),
            "image_features": str(out_dir / "image_features.emb"),
            "expert_features": str(out_dir / "expert_features.emb"),
            "mention_features": str(out_dir / "mention_features.emb"),
            "entity_embeddings": str(out_dir / "entity_embeddings.emb"),
        },
        "text_encoder": "hash-text",
        "image_encoder": "hash-image",
        "expert_encoder": "template-expert",
    }
    manifest.update(overrides)
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    return path


@pytest.fixture
def extraction_setup(tmp_path):
    images_dir = tmp_path / "images"
    image_ids = make_images(images_dir, 6)
    samples_path, entities_path = make_records(tmp_path, image_ids)
    out_dir = tmp_path / "out"
    manifest_path = make_manifest(tmp_path, images_dir, samples_path, entities_path,
                                  out_dir)
    return dict(images_dir=images_dir, image_ids=image_ids, samples=samples_path,
                entities=entities_path, out_dir=out_dir, manifest=manifest_path,
                tmp_path=tmp_path)
