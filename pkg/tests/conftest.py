"""Shared test utilities: finite-difference oracles and error measures.

The numerical differentiation here is deliberately independent of the tape
machinery it is used to check: it only perturbs raw arrays and re-runs a
closure.
"""

import numpy as np


def central_difference(f, arr: np.ndarray, i: int, j: int, h: float = 1e-5) -> float:
    """d f / d arr[i, j] by central differences, restoring the entry."""
    orig = arr[i, j]
    arr[i, j] = orig + h
    up = f()
    arr[i, j] = orig - h
    down = f()
    arr[i, j] = orig
    return (up - down) / (2.0 * h)


def relative_error(a: float, b: float, floor: float = 1e-6) -> float:
    """|a - b| scaled by the larger magnitude, floored for near-zero pairs."""
    return abs(a - b) / max(abs(a), abs(b), floor)


def check_gradients(f, tensors, grads, rng, entries_per_tensor: int = 4,
                    h: float = 1e-5, tol: float = 1e-4) -> float:
    """Spot-check analytic grads of ``f`` against central differences.

    ``tensors`` maps names to leaf tensors whose ``data`` gets perturbed in
    place; ``grads`` is the Gradients object from one backward pass.  Returns
    the worst relative error seen (and asserts it is within ``tol``).
    """
    worst = 0.0
    for name, t in tensors.items():
        analytic = grads[t]
        for _ in range(entries_per_tensor):
            i = int(rng.integers(t.data.shape[0]))
            j = int(rng.integers(t.data.shape[1]))
            fd = central_difference(f, t.data, i, j, h=h)
            err = relative_error(analytic[i, j], fd)
            assert err < tol, (
                f"gradient mismatch for {name}[{i},{j}]: "
                f"analytic {analytic[i, j]:.8e} vs fd {fd:.8e} (rel err {err:.2e})")
            worst = max(worst, err)
    return worst
