"""On-disk dataset directories and the in-memory bundle tying them together.

A dataset directory uses fixed file names:

    samples.jsonl            mention samples
    entities.jsonl           entity records
    text_features.emb        per-sample pooled text features
    image_features.emb       per-sample pooled image features
    expert_features.emb      per-sample expert features
    mention_features.emb     per-sample mention features (optional)
    entity_embeddings.emb    per-entity embeddings
    candidates.jsonl         candidate sets (optional)
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from .candidates import CandidateSet, read_candidate_sets, write_candidate_sets
from .data import (EntityRecord, MentionSample, read_entities, read_samples,
                   validate_references, write_entities, write_samples)
from .embfile import EmbeddingTable, read_embeddings, write_embeddings
from .errors import DataError
from .fusion import FeatureBundle

__all__ = ["FeatureStore", "DatasetBundle", "load_dataset", "write_dataset"]

SAMPLES_FILE = "samples.jsonl"
ENTITIES_FILE = "entities.jsonl"
TEXT_FEATURES_FILE = "text_features.emb"
IMAGE_FEATURES_FILE = "image_features.emb"
EXPERT_FEATURES_FILE = "expert_features.emb"
MENTION_FEATURES_FILE = "mention_features.emb"
ENTITY_EMBEDDINGS_FILE = "entity_embeddings.emb"
CANDIDATES_FILE = "candidates.jsonl"


@dataclass
class FeatureStore:
    """Per-sample encoder outputs, one table per feature kind."""

    text: EmbeddingTable
    image: EmbeddingTable
    expert: EmbeddingTable
    mention: EmbeddingTable | None = None

    @property
    def dim(self) -> int:
        return self.text.dim

    def bundle_for(self, sample_id: str, with_mention: bool = False) -> FeatureBundle:
        """Assemble the fusion input for one sample (pooled = length-1 sequences)."""
        for label, table in (("text", self.text), ("image", self.image),
                             ("expert", self.expert)):
            if sample_id not in table:
                raise DataError(f"no {label} feature stored for sample {sample_id!r}")
        mention = None
        if with_mention:
            if self.mention is None or sample_id not in self.mention:
                raise DataError(f"no mention feature stored for sample {sample_id!r}")
            mention = self.mention.vector(sample_id).reshape(1, -1)
        return FeatureBundle(
            text_seq=self.text.vector(sample_id).reshape(1, -1),
            image_seq=self.image.vector(sample_id).reshape(1, -1),
            expert=self.expert.vector(sample_id).reshape(1, -1),
            mention=mention,
        )


@dataclass
class DatasetBundle:
    """Everything one run needs: records, features, embeddings, candidates."""

    samples: list[MentionSample]
    entities: list[EntityRecord]
    features: FeatureStore
    entity_embeddings: EmbeddingTable
    candidates: dict[str, CandidateSet] = field(default_factory=dict)

    def validate(self) -> None:
        """Cross-check references and feature coverage; raises DataError."""
        validate_references(self.samples, self.entities)
        entity_ids = {e.id for e in self.entities}
        for extra in self.entity_embeddings.entries:
            if extra not in entity_ids:
                raise DataError(f"entity embedding {extra!r} has no entity record")
        for sample in self.samples:
            self.features.bundle_for(sample.id)
            if sample.gold_entity_id not in self.entity_embeddings:
                raise DataError(
                    f"gold entity {sample.gold_entity_id!r} of sample {sample.id!r} "
                    f"has no embedding")
        for cand in self.candidates.values():
            for eid in cand.entity_ids:
                if eid not in entity_ids:
                    raise DataError(
                        f"candidate set {cand.mention_id!r} references unknown entity {eid!r}")

    def candidate_set_for(self, sample: MentionSample) -> CandidateSet:
        cand = self.candidates.get(sample.id)
        if cand is None:
            raise DataError(f"no candidate set for sample {sample.id!r}")
        return cand


def load_dataset(directory: str, with_candidates: bool = True,
                 truncate_to: int | None = None) -> DatasetBundle:
    """Read a dataset directory into memory, validating cross-references."""

    def p(name: str) -> str:
        return os.path.join(directory, name)

    entities = read_entities(p(ENTITIES_FILE), truncate_to=truncate_to)
    samples = read_samples(p(SAMPLES_FILE), entities=entities)
    mention_path = p(MENTION_FEATURES_FILE)
    features = FeatureStore(
        text=read_embeddings(p(TEXT_FEATURES_FILE)),
        image=read_embeddings(p(IMAGE_FEATURES_FILE)),
        expert=read_embeddings(p(EXPERT_FEATURES_FILE)),
        mention=read_embeddings(mention_path) if os.path.exists(mention_path) else None,
    )
    candidates: dict[str, CandidateSet] = {}
    candidates_path = p(CANDIDATES_FILE)
    if with_candidates and os.path.exists(candidates_path):
        for cand in read_candidate_sets(candidates_path):
            candidates[cand.mention_id] = cand
    bundle = DatasetBundle(
        samples=samples, entities=entities, features=features,
        entity_embeddings=read_embeddings(p(ENTITY_EMBEDDINGS_FILE)),
        candidates=candidates)
    bundle.validate()
    return bundle


def write_dataset(bundle: DatasetBundle, directory: str) -> None:
    """Write all parts of a bundle into a dataset directory."""
    os.makedirs(directory, exist_ok=True)

    def p(name: str) -> str:
        return os.path.join(directory, name)

    write_samples(bundle.samples, p(SAMPLES_FILE))
    write_entities(bundle.entities, p(ENTITIES_FILE))
    write_embeddings(bundle.features.text, p(TEXT_FEATURES_FILE))
    write_embeddings(bundle.features.image, p(IMAGE_FEATURES_FILE))
    write_embeddings(bundle.features.expert, p(EXPERT_FEATURES_FILE))
    if bundle.features.mention is not None:
        write_embeddings(bundle.features.mention, p(MENTION_FEATURES_FILE))
    write_embeddings(bundle.entity_embeddings, p(ENTITY_EMBEDDINGS_FILE))
    if bundle.candidates:
        write_candidate_sets(
            [bundle.candidates[sample.id] for sample in bundle.samples
             if sample.id in bundle.candidates],
            p(CANDIDATES_FILE))
