"""Mini-batch contrastive training of the fusion model.

Each epoch shuffles the samples with a counter-based generator keyed by
(seed, epoch), so a run can be reproduced or resumed mid-training without
replaying earlier epochs.  The batch loss is the sum of per-sample losses;
the recorded epoch loss is normalized per sample so curves are comparable
across batch sizes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tape, backward
from .dataset import DatasetBundle
from .errors import DegenerateBatchError, TrainingError
from .fusion import AttentionParams, forward, init_params, params_from_arrays, params_to_arrays
from .losses import LossBatch, batch_from_candidates, npair_paper, npair_standard
from .optim import AdamWState, adamw_step

__all__ = ["TrainResult", "epoch_order", "train_model", "write_loss_curve"]


@dataclass
class TrainResult:
    params: AttentionParams
    best_params: AttentionParams
    epoch_losses: list[float]
    best_epoch: int  # 0 when no epochs ran


def epoch_order(seed: int, epoch: int, n: int) -> np.ndarray:
    """Deterministic permutation of n sample indices for one epoch."""
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, epoch], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key)).permutation(n)


def _validate_trainable(bundle: DatasetBundle) -> None:
    for sample in bundle.samples:
        cand = bundle.candidates.get(sample.id)
        if cand is None:
            raise TrainingError(f"sample {sample.id!r} has no candidate set")
        if sample.gold_entity_id not in cand.entity_ids:
            raise TrainingError(
                f"candidate set for sample {sample.id!r} does not contain its gold "
                f"entity {sample.gold_entity_id!r}")
        if len(cand.entity_ids) < 2:
            raise TrainingError(
                f"candidate set for sample {sample.id!r} leaves no negatives")


def train_model(bundle: DatasetBundle, epochs: int, batch_size: int,
                learning_rate: float, seed: int, loss_mode: str = "standard",
                dim: int | None = None, heads: int = 8,
                fuse_mention: bool = False,
                initial: AttentionParams | None = None) -> TrainResult:
    """Train fusion weights on a dataset with per-sample candidate negatives."""
    if loss_mode not in ("standard", "paper"):
        raise TrainingError(f"unknown loss mode {loss_mode!r}")
    if epochs < 0 or batch_size < 1:
        raise TrainingError(
            f"epochs must be >= 0 and batch size >= 1, got {epochs}, {batch_size}")
    _validate_trainable(bundle)
    bundle.validate()

    if initial is not None:
        params = initial
    else:
        if dim is None:
            dim = bundle.features.dim
        params = init_params(seed, dim, heads, fuse_mention=fuse_mention)
    if params.dim != bundle.features.dim:
        raise TrainingError(
            f"model width {params.dim} does not match feature width {bundle.features.dim}")

    named = params.named()
    state = AdamWState.for_params(named, lr=learning_rate)
    loss_fn = npair_standard if loss_mode == "standard" else npair_paper
    with_mention = params.mention_proj is not None

    n = len(bundle.samples)
    epoch_losses: list[float] = []
    best_loss = float("inf")
    best_arrays = params_to_arrays(params)
    best_epoch = 0
    for epoch in range(epochs):
        order = epoch_order(seed, epoch, n)
        total = 0.0
        for start in range(0, n, batch_size):
            batch_samples = [bundle.samples[int(i)] for i in order[start:start + batch_size]]
            with Tape() as tape:
                pairs = []
                for sample in batch_samples:
                    features = bundle.features.bundle_for(sample.id, with_mention=with_mention)
                    fused = forward(features, params).fused
                    cand = bundle.candidates[sample.id]
                    pairs.append(batch_from_candidates(
                        fused, sample.gold_entity_id, cand.entity_ids,
                        bundle.entity_embeddings))
                try:
                    loss = loss_fn(LossBatch(pairs))
                except DegenerateBatchError as exc:
                    raise TrainingError(
                        f"epoch {epoch}: {exc} (loss_mode=paper hit its precondition; "
                        f"rerun with loss_mode=standard)") from exc
            grads = backward(tape, loss)
            adamw_step(named, grads, state)
            total += loss.item()
        mean_loss = total / n
        epoch_losses.append(mean_loss)
        if mean_loss < best_loss:
            best_loss = mean_loss
            best_arrays = params_to_arrays(params)
            best_epoch = epoch + 1
    return TrainResult(
        params=params,
        best_params=params_from_arrays(best_arrays),
        epoch_losses=epoch_losses,
        best_epoch=best_epoch,
    )


def write_loss_curve(losses: list[float], path: str) -> None:
    """One line per epoch: epoch number, tab, per-sample mean loss."""
    from .data import _atomic_write_text

    _atomic_write_text(
        path, "".join(f"{i + 1}\t{value:.12g}\n" for i, value in enumerate(losses)))
