"""Synthetic planted-solution datasets for desk-scale testing and training.

Each sample gets its own gold entity.  Features are length-1 sequences built
so that, under identity projections, the fused output equals
``text + image + expert`` exactly; the gold entity's embedding is the unit
normalization of that target plus Gaussian noise of the requested scale.
With zero noise the gold is therefore the exact nearest candidate before any
training, and with small noise the instance is recoverable by training from
a random initialization.

Everything is drawn from one seeded generator, so the same arguments always
produce byte-identical datasets.  Values round-trip through float32 at
generation time to match what the file formats store.
"""

from __future__ import annotations

import numpy as np

from .candidates import CandidateSet, similarity_ratio
from .data import EntityRecord, MentionSample
from .dataset import DatasetBundle, FeatureStore
from .embfile import EmbeddingTable
from .errors import ConfigurationError

__all__ = ["mock_generate"]

# Norm of the text/image features relative to the unit expert feature.  The
# expert term anchors the fused output, and this scale leaves enough headroom
# that an untrained model ranks well below the recovery thresholds while a
# trained one saturates them.
CONTEXT_FEATURE_SCALE = 0.7

_WORDS = (
    "river", "window", "garden", "station", "mountain", "letter", "harbor",
    "evening", "market", "bridge", "signal", "meadow", "corner", "journey",
    "lantern", "orchard", "thunder", "village", "whisper", "horizon",
)

_SYLLABLES = (
    "bar", "cel", "dan", "for", "gol", "han", "jor", "kal", "lin", "mar",
    "nev", "oli", "pra", "qui", "ros", "sal", "tor", "ulm", "ver", "wex",
)


def _unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.normal(size=dim)
    return v / np.linalg.norm(v)


def _f32(a: np.ndarray) -> np.ndarray:
    return a.astype(np.float32).astype(np.float64)


def _entity_name(rng: np.random.Generator) -> str:
    first = "".join(rng.choice(_SYLLABLES, size=2)).capitalize()
    last = "".join(rng.choice(_SYLLABLES, size=3)).capitalize()
    return f"{first} {last}"


def _perturb_name(rng: np.random.Generator, name: str) -> str:
    """Drop one interior character so fuzzy matching has something to do."""
    if len(name) < 4:
        return name
    pos = int(rng.integers(1, len(name) - 1))
    return name[:pos] + name[pos + 1:]


def mock_generate(seed: int, n_samples: int, n_entities: int, dim: int,
                  noise_sigma: float, n_candidates: int = 100) -> DatasetBundle:
    """Build a full synthetic dataset with planted gold directions.

    ``n_entities`` must be at least ``n_samples`` (one distinct gold per
    sample) and at least ``n_candidates``; the surplus entities act as
    distractors.  Candidate sets hold the gold plus seeded-random other
    entities, ordered by fuzzy name similarity to the mention.
    """
    if dim < 2:
        raise ConfigurationError(f"dim must be >= 2, got {dim}")
    if n_entities < 2:
        raise ConfigurationError(f"n_entities must be >= 2, got {n_entities}")
    if n_samples < 1:
        raise ConfigurationError(f"n_samples must be >= 1, got {n_samples}")
    if n_entities < n_samples:
        raise ConfigurationError(
            f"planted construction needs one gold entity per sample: "
            f"n_entities {n_entities} < n_samples {n_samples}")
    if not 2 <= n_candidates <= n_entities:
        raise ConfigurationError(
            f"n_candidates must lie in [2, n_entities], got {n_candidates}")
    if noise_sigma < 0:
        raise ConfigurationError(f"noise_sigma must be >= 0, got {noise_sigma}")

    rng = np.random.default_rng(seed)
    entity_ids = [f"e{idx:06d}" for idx in range(n_entities)]
    names = [_entity_name(rng) for _ in range(n_entities)]

    entities = [
        EntityRecord(
            id=eid, name=name,
            representation=f"{name} is a synthetic figure catalogued as {eid}.",
            representation_source="original")
        for eid, name in zip(entity_ids, names)
    ]

    text_table = EmbeddingTable(dim=dim)
    image_table = EmbeddingTable(dim=dim)
    expert_table = EmbeddingTable(dim=dim)
    mention_table = EmbeddingTable(dim=dim)
    entity_table = EmbeddingTable(dim=dim)

    samples: list[MentionSample] = []
    gold_targets = np.zeros((n_samples, dim))
    for i in range(n_samples):
        sid = f"s{i:06d}"
        expert_vec = _unit(rng, dim)
        text_vec = CONTEXT_FEATURE_SCALE * _unit(rng, dim)
        image_vec = CONTEXT_FEATURE_SCALE * _unit(rng, dim)
        mention_vec = _unit(rng, dim)
        gold_targets[i] = text_vec + image_vec + expert_vec

        gold_name = names[i]
        mention = _perturb_name(rng, gold_name)
        context = " ".join(rng.choice(_WORDS, size=int(rng.integers(4, 9))))
        samples.append(MentionSample(
            id=sid,
            text=f"{mention} near the {context}",
            mention=mention,
            image_id=f"img{i:06d}",
            expert_c1=f"a person beside a {rng.choice(_WORDS)}",
            expert_c2=gold_name,
            gold_entity_id=entity_ids[i],
        ))
        text_table.put(sid, _f32(text_vec))
        image_table.put(sid, _f32(image_vec))
        expert_table.put(sid, _f32(expert_vec))
        mention_table.put(sid, _f32(mention_vec))

    for j, eid in enumerate(entity_ids):
        if j < n_samples:
            target = gold_targets[j] / np.linalg.norm(gold_targets[j])
            emb = target + noise_sigma * rng.normal(size=dim)
        else:
            emb = _unit(rng, dim)
        entity_table.put(eid, _f32(emb))

    name_of = dict(zip(entity_ids, names))
    candidates: dict[str, CandidateSet] = {}
    all_indices = np.arange(n_entities)
    for i, sample in enumerate(samples):
        others = np.delete(all_indices, i)
        picks = rng.choice(others, size=n_candidates - 1, replace=False)
        member_ids = [entity_ids[i]] + [entity_ids[int(j)] for j in picks]
        scored = sorted(
            ((similarity_ratio(sample.mention, name_of[eid]), eid)
             for eid in member_ids),
            key=lambda pair: (-pair[0], pair[1]))
        candidates[sample.id] = CandidateSet(
            mention_id=sample.id,
            entity_ids=[eid for _, eid in scored],
            scores=[score for score, _ in scored],
            gold_included=True,
        )

    bundle = DatasetBundle(
        samples=samples,
        entities=entities,
        features=FeatureStore(text=text_table, image=image_table,
                              expert=expert_table, mention=mention_table),
        entity_embeddings=entity_table,
        candidates=candidates,
    )
    bundle.validate()
    return bundle
