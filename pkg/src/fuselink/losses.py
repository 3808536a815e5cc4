"""Contrastive training objectives over fused features and entity embeddings.

Two modes are provided.  The standard mode is the numerically safe default:
log(1 + sum_j exp(s_nj - s_p)) per sample, log-sum-exp stabilized.  The
literal mode divides the positive similarity by the *sum* of negative
similarities; that denominator can legitimately approach zero, in which case
the loss is undefined and a DegenerateBatchError is raised rather than
silently stabilizing into huge spikes.

Similarity is fixed to cosine so training and ranking share one geometry.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .embfile import EmbeddingTable
from .errors import ConfigurationError, ContractError, DegenerateBatchError

__all__ = [
    "PAPER_DENOM_FLOOR",
    "LossPair",
    "LossBatch",
    "npair_standard",
    "npair_paper",
    "batch_from_candidates",
]

# Below this magnitude the literal-form denominator is treated as degenerate.
PAPER_DENOM_FLOOR = 1e-6

LOSS_MODES = ("standard", "paper")


@dataclass
class LossPair:
    """One training triple: fused feature, gold embedding, negative embeddings.

    ``fused`` is typically a live tape node from the fusion forward pass;
    ``positive`` (1xD) and ``negatives`` (KxD, K >= 1) are constants.
    """

    fused: Tensor
    positive: Tensor
    negatives: Tensor

    def __post_init__(self):
        if self.fused.rows != 1 or self.positive.rows != 1:
            raise ContractError("fused and positive must be single row vectors")
        d = self.fused.cols
        if self.positive.cols != d or self.negatives.cols != d:
            raise ContractError(
                f"loss pair width mismatch: fused {d}, positive {self.positive.cols}, "
                f"negatives {self.negatives.cols}")
        if self.negatives.rows < 1:
            raise ContractError("a loss pair needs at least one negative")
        for label, t in (("fused", self.fused), ("positive", self.positive),
                         ("negatives", self.negatives)):
            if not np.isfinite(t.data).all():
                raise ContractError(f"{label} tensor contains NaN or infinite entries")


@dataclass
class LossBatch:
    pairs: list[LossPair]

    def __post_init__(self):
        if not self.pairs:
            raise ContractError("loss batch is empty")
        d = self.pairs[0].fused.cols
        if any(p.fused.cols != d for p in self.pairs):
            raise ContractError("all pairs in a batch must share one feature width")


def npair_standard(batch: LossBatch) -> Tensor:
    """Stable contrastive loss: sum_i log(1 + sum_j exp(s_nj - s_p))."""
    total = None
    for pair in batch.pairs:
        s_pos = ad.cosine(pair.fused, pair.positive)
        s_neg = ad.cosine_rows(pair.fused, pair.negatives)
        term = ad.log1p_sum_exp(ad.sub_scalar(s_neg, s_pos))
        total = term if total is None else ad.add(total, term)
    return total


def npair_paper(batch: LossBatch) -> Tensor:
    """Literal contrastive form: sum_i [-s_p / sum_j s_nj + log sum_j exp(s_nj)].

    Raises DegenerateBatchError when any pair's negative-similarity sum has
    magnitude below PAPER_DENOM_FLOOR; callers should resample or switch to
    the standard mode.
    """
    total = None
    for index, pair in enumerate(batch.pairs):
        s_pos = ad.cosine(pair.fused, pair.positive)
        s_neg = ad.cosine_rows(pair.fused, pair.negatives)
        denom = ad.sumall(s_neg)
        if abs(denom.item()) < PAPER_DENOM_FLOOR:
            raise DegenerateBatchError(
                f"negative-similarity sum {denom.item():.3e} for pair {index} is below "
                f"{PAPER_DENOM_FLOOR:g}; resample the batch or use the standard loss mode")
        term = ad.add(ad.scale(ad.div(s_pos, denom), -1.0), ad.log_sum_exp(s_neg))
        total = term if total is None else ad.add(total, term)
    return total


def batch_from_candidates(fused: Tensor, gold_id: str, candidate_ids: list[str],
                          embeddings: EmbeddingTable) -> LossPair:
    """Build a loss pair from a candidate list, excluding the gold entity.

    Every occurrence of ``gold_id`` is removed from the negatives; at least
    one non-gold candidate must remain.
    """
    if gold_id not in candidate_ids:
        raise ConfigurationError(f"gold entity {gold_id!r} is not among the candidates")
    negative_ids = [cid for cid in candidate_ids if cid != gold_id]
    if not negative_ids:
        raise ConfigurationError(
            f"candidate list for gold {gold_id!r} leaves no negatives")
    positive = Tensor(embeddings.vector(gold_id).reshape(1, -1))
    negatives = Tensor(np.stack([embeddings.vector(cid) for cid in negative_ids]))
    return LossPair(fused=fused, positive=positive, negatives=negatives)
