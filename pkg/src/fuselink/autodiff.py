"""Dense 2-D tensors with tape-based reverse-mode differentiation.

The model and losses in this package are built from a small set of matrix
primitives.  Each primitive computes its result eagerly with numpy and, when
a ``Tape`` is active, appends one record holding the backward rule.  Calling
``backward`` replays the records in reverse order (append order is a
topological order, so one reverse sweep visits every node exactly once) and
accumulates gradients for the leaf tensors.

Conventions: everything is float64; vectors are 1xN row tensors; a scalar is
a 1x1 tensor.  A tape and the tensors recorded on it belong to a single
thread; independent tapes may run concurrently in separate workers.
"""

from __future__ import annotations

import math
import threading
from typing import Callable, Sequence

import numpy as np

from .errors import ContractError, DimensionError, DomainError

__all__ = [
    "Tensor",
    "Tape",
    "Gradients",
    "backward",
    "matmul",
    "transpose",
    "add",
    "sub",
    "sub_scalar",
    "scale",
    "div",
    "exp",
    "log",
    "sumall",
    "softmax",
    "cosine",
    "cosine_rows",
    "log_sum_exp",
    "log1p_sum_exp",
    "concat_cols",
]


class Tensor:
    """A rows x cols matrix of float64 values.

    Public construction validates shape and finiteness; operation results are
    wrapped internally without re-validation.  ``data`` is the backing numpy
    array and may be mutated in place by the optimizer (leaves only).
    """

    __slots__ = ("data", "name")

    def __init__(self, data, name: str = ""):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2:
            raise DimensionError(f"tensor must be 2-D, got shape {arr.shape}")
        if arr.size and not np.isfinite(arr).all():
            raise DomainError(f"tensor {name or '<unnamed>'} contains non-finite entries")
        self.data = np.ascontiguousarray(arr)
        self.name = name

    @classmethod
    def _wrap(cls, arr: np.ndarray, name: str = "") -> "Tensor":
        out = cls.__new__(cls)
        out.data = arr
        out.name = name
        return out

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() on non-scalar tensor of shape {self.shape}")
        return float(self.data[0, 0])

    def detach(self) -> "Tensor":
        """Copy the values into a fresh leaf; gradients stop here."""
        return Tensor._wrap(self.data.copy(), self.name)

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}({self.rows}x{self.cols})"


class _Record:
    """One primitive application: the output node plus its backward rule."""

    __slots__ = ("out", "backward")

    def __init__(self, out: Tensor, backward: Callable[[np.ndarray, "_Accumulator"], None]):
        self.out = out
        self.backward = backward


_STATE = threading.local()


def _tape_stack() -> list["Tape"]:
    stack = getattr(_STATE, "stack", None)
    if stack is None:
        stack = []
        _STATE.stack = stack
    return stack


def _active_tape() -> "Tape | None":
    stack = _tape_stack()
    return stack[-1] if stack else None


class Tape:
    """Ordered record of primitive operations for one differentiation pass.

    Used as a context manager: operations executed inside the ``with`` block
    are recorded; outside any tape they just compute values.
    """

    def __init__(self):
        self._records: list[_Record] = []

    def __enter__(self) -> "Tape":
        _tape_stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        stack = _tape_stack()
        if not stack or stack[-1] is not self:
            raise ContractError("tape context exited out of order")
        stack.pop()

    def __len__(self) -> int:
        return len(self._records)

    def _record(self, out: Tensor, backward_fn) -> None:
        self._records.append(_Record(out, backward_fn))


class _Accumulator:
    def __init__(self):
        self.grads: dict[int, np.ndarray] = {}
        self.holders: dict[int, Tensor] = {}

    def add(self, t: Tensor, g: np.ndarray) -> None:
        key = id(t)
        if key in self.grads:
            self.grads[key] += g
        else:
            self.grads[key] = np.array(g, dtype=np.float64)
            self.holders[key] = t


class Gradients:
    """Gradient lookup keyed by tensor; absent tensors read as zero.

    A tensor that has no path to the loss simply never accumulated anything,
    so indexing it returns a zero array of its shape.
    """

    def __init__(self, acc: _Accumulator):
        self._grads = acc.grads
        self._holders = acc.holders

    def __getitem__(self, t: Tensor) -> np.ndarray:
        g = self._grads.get(id(t))
        if g is None:
            return np.zeros_like(t.data)
        return g

    def __contains__(self, t: Tensor) -> bool:
        return id(t) in self._grads


def backward(tape: Tape, loss: Tensor) -> Gradients:
    """Reverse sweep over the tape, seeding d(loss)/d(loss) = 1.

    ``loss`` must be a 1x1 tensor produced on this tape.  Returns gradients
    of the loss with respect to every tensor that participated.
    """
    if loss.shape != (1, 1):
        raise ContractError(f"loss must be a 1x1 scalar, got shape {loss.shape}")
    if not any(rec.out is loss for rec in tape._records):
        raise ContractError("loss tensor was not produced on this tape")
    acc = _Accumulator()
    acc.add(loss, np.ones((1, 1)))
    for rec in reversed(tape._records):
        g = acc.grads.get(id(rec.out))
        if g is None:
            continue
        rec.backward(g, acc)
    return Gradients(acc)


# ---------------------------------------------------------------------------
# primitives
# ---------------------------------------------------------------------------


def _emit(out_data: np.ndarray, backward_fn) -> Tensor:
    out = Tensor._wrap(out_data)
    tape = _active_tape()
    if tape is not None:
        tape._record(out, backward_fn)
    return out


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product a @ b."""
    if a.cols != b.rows:
        raise DimensionError(f"matmul shape mismatch: {a.shape} x {b.shape}")

    def bwd(g, acc):
        acc.add(a, g @ b.data.T)
        acc.add(b, a.data.T @ g)

    return _emit(a.data @ b.data, bwd)


def transpose(a: Tensor) -> Tensor:
    def bwd(g, acc):
        acc.add(a, g.T)

    return _emit(np.ascontiguousarray(a.data.T), bwd)


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise DimensionError(f"add shape mismatch: {a.shape} vs {b.shape}")

    def bwd(g, acc):
        acc.add(a, g)
        acc.add(b, g)

    return _emit(a.data + b.data, bwd)


def sub(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise DimensionError(f"sub shape mismatch: {a.shape} vs {b.shape}")

    def bwd(g, acc):
        acc.add(a, g)
        acc.add(b, -g)

    return _emit(a.data - b.data, bwd)


def sub_scalar(a: Tensor, s: Tensor) -> Tensor:
    """Subtract a 1x1 scalar from every entry of ``a``."""
    if s.shape != (1, 1):
        raise DimensionError(f"sub_scalar needs a 1x1 scalar, got {s.shape}")

    def bwd(g, acc):
        acc.add(a, g)
        acc.add(s, np.array([[-g.sum()]]))

    return _emit(a.data - s.data[0, 0], bwd)


def scale(a: Tensor, c: float) -> Tensor:
    """Multiply by a plain (non-differentiated) scalar constant."""
    c = float(c)

    def bwd(g, acc):
        acc.add(a, g * c)

    return _emit(a.data * c, bwd)


def div(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise a / b for same-shape tensors; b must be nowhere zero."""
    if a.shape != b.shape:
        raise DimensionError(f"div shape mismatch: {a.shape} vs {b.shape}")
    if np.any(b.data == 0.0):
        raise DomainError("division by zero entry")

    def bwd(g, acc):
        acc.add(a, g / b.data)
        acc.add(b, -g * a.data / (b.data * b.data))

    return _emit(a.data / b.data, bwd)


def exp(a: Tensor) -> Tensor:
    out_data = np.exp(a.data)

    def bwd(g, acc):
        acc.add(a, g * out_data)

    return _emit(out_data, bwd)


def log(a: Tensor) -> Tensor:
    if np.any(a.data <= 0.0):
        raise DomainError("log of non-positive entry")

    def bwd(g, acc):
        acc.add(a, g / a.data)

    return _emit(np.log(a.data), bwd)


def sumall(a: Tensor) -> Tensor:
    """Sum of all entries, as a 1x1 scalar."""

    def bwd(g, acc):
        acc.add(a, np.full_like(a.data, g[0, 0]))

    return _emit(np.array([[a.data.sum()]]), bwd)


def softmax(x: Tensor) -> Tensor:
    """Softmax over the entries of a 1xN row vector, max-subtracted for stability."""
    if x.rows != 1:
        raise DimensionError(f"softmax expects a 1xN row vector, got {x.shape}")
    if x.cols == 0:
        raise DomainError("softmax of an empty vector")
    shifted = x.data - x.data.max()
    e = np.exp(shifted)
    out_data = e / e.sum()

    def bwd(g, acc):
        dot = float((g * out_data).sum())
        acc.add(x, out_data * (g - dot))

    return _emit(out_data, bwd)


def _row_norm(v: np.ndarray) -> float:
    return float(np.sqrt((v * v).sum()))


def cosine(a: Tensor, b: Tensor) -> Tensor:
    """Cosine similarity of two 1xD row vectors, as a 1x1 scalar in [-1, 1]."""
    if a.rows != 1 or b.rows != 1:
        raise DimensionError(f"cosine expects row vectors, got {a.shape} and {b.shape}")
    if a.cols != b.cols:
        raise DimensionError(f"cosine length mismatch: {a.cols} vs {b.cols}")
    na = _row_norm(a.data[0])
    nb = _row_norm(b.data[0])
    if na == 0.0 or nb == 0.0:
        raise DomainError("cosine similarity of a zero-norm vector is undefined")
    raw = float(a.data[0] @ b.data[0]) / (na * nb)
    val = min(1.0, max(-1.0, raw))

    def bwd(g, acc):
        gs = g[0, 0]
        acc.add(a, gs * (b.data / (na * nb) - raw * a.data / (na * na)))
        acc.add(b, gs * (a.data / (na * nb) - raw * b.data / (nb * nb)))

    return _emit(np.array([[val]]), bwd)


def cosine_rows(q: Tensor, m: Tensor) -> Tensor:
    """Cosine similarity of a 1xD query against every row of an LxD matrix.

    Returns a 1xL row of similarities.  One record on the tape regardless of
    L, which keeps large candidate lists cheap to differentiate through.
    """
    if q.rows != 1:
        raise DimensionError(f"cosine_rows expects a 1xD query, got {q.shape}")
    if q.cols != m.cols:
        raise DimensionError(f"cosine_rows width mismatch: {q.cols} vs {m.cols}")
    if m.rows == 0:
        raise DomainError("cosine_rows against an empty matrix")
    nq = _row_norm(q.data[0])
    norms = np.sqrt((m.data * m.data).sum(axis=1))
    if nq == 0.0 or np.any(norms == 0.0):
        raise DomainError("cosine similarity of a zero-norm vector is undefined")
    raw = (m.data @ q.data[0]) / (norms * nq)
    out_data = np.clip(raw, -1.0, 1.0).reshape(1, -1)

    def bwd(g, acc):
        gr = g[0]  # (L,)
        coef = gr / (norms * nq)
        dq = coef @ m.data - float((gr * raw / (nq * nq)).sum()) * q.data[0]
        dm = np.outer(coef, q.data[0]) - ((gr * raw) / (norms * norms))[:, None] * m.data
        acc.add(q, dq.reshape(1, -1))
        acc.add(m, dm)

    return _emit(out_data, bwd)


def log_sum_exp(x: Tensor) -> Tensor:
    """log(sum_j exp(x_j)) of a 1xN row, shift-stabilized; 1x1 output."""
    if x.rows != 1 or x.cols == 0:
        raise DimensionError(f"log_sum_exp expects a non-empty 1xN row, got {x.shape}")
    m = x.data.max()
    e = np.exp(x.data - m)
    total = e.sum()
    weights = e / total

    def bwd(g, acc):
        acc.add(x, g[0, 0] * weights)

    return _emit(np.array([[m + math.log(total)]]), bwd)


def log1p_sum_exp(x: Tensor) -> Tensor:
    """log(1 + sum_j exp(x_j)) of a 1xN row, shift-stabilized; 1x1 output."""
    if x.rows != 1 or x.cols == 0:
        raise DimensionError(f"log1p_sum_exp expects a non-empty 1xN row, got {x.shape}")
    m = max(0.0, float(x.data.max()))
    e = np.exp(x.data - m)
    total = math.exp(-m) + e.sum()
    weights = e / total

    def bwd(g, acc):
        acc.add(x, g[0, 0] * weights)

    return _emit(np.array([[m + math.log(total)]]), bwd)


def concat_cols(parts: Sequence[Tensor]) -> Tensor:
    """Concatenate tensors with equal row counts along columns."""
    parts = list(parts)
    if not parts:
        raise DimensionError("concat_cols of an empty sequence")
    rows = parts[0].rows
    if any(p.rows != rows for p in parts):
        raise DimensionError("concat_cols row counts differ")
    widths = [p.cols for p in parts]

    def bwd(g, acc):
        offset = 0
        for p, w in zip(parts, widths):
            acc.add(p, g[:, offset:offset + w])
            offset += w

    return _emit(np.concatenate([p.data for p in parts], axis=1), bwd)
