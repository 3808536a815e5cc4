"""AdamW with decoupled weight decay, operating on named parameter tensors."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Gradients, Tensor
from .errors import DimensionError, TrainingError

__all__ = ["AdamWState", "adamw_step"]


@dataclass
class AdamWState:
    """Optimizer hyperparameters plus per-parameter moment estimates.

    ``lr`` defaults to the conventional AdamW 1e-3; training configs override
    it.  The moments are keyed by parameter name and created lazily by
    ``for_params``.
    """

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise TrainingError(f"betas must lie in (0, 1), got ({self.beta1}, {self.beta2})")
        if self.step < 0:
            raise TrainingError(f"step counter must be >= 0, got {self.step}")

    @classmethod
    def for_params(cls, params: dict[str, Tensor], **hyper) -> "AdamWState":
        state = cls(**hyper)
        for name, p in params.items():
            state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        return state


def adamw_step(params: dict[str, Tensor], grads: Gradients | dict[str, np.ndarray],
               state: AdamWState) -> None:
    """Apply one AdamW update in place.

    Weight decay is decoupled: it shrinks the parameter directly instead of
    being folded into the gradient, and both moments are bias-corrected.
    """
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.step
    c2 = 1.0 - b2 ** state.step
    for name, p in params.items():
        g = grads[name] if isinstance(grads, dict) else grads[p]
        if g.shape != p.data.shape:
            raise DimensionError(
                f"gradient shape {g.shape} does not match parameter {name!r} {p.data.shape}")
        if np.isnan(g).any():
            raise TrainingError(f"NaN gradient for parameter {name!r}")
        m = state.m.get(name)
        if m is None or m.shape != p.data.shape:
            raise DimensionError(f"optimizer state for {name!r} missing or mis-shaped")
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        if state.weight_decay:
            p.data -= state.lr * state.weight_decay * p.data
        update = (m / c1) / (np.sqrt(v / c2) + state.eps)
        p.data -= state.lr * update
