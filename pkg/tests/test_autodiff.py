"""Tensor primitives, tape replay, and gradient correctness."""

import math

import numpy as np
import pytest

from fuselink import autodiff as ad
from fuselink.autodiff import Tape, Tensor, backward
from fuselink.errors import ContractError, DimensionError, DomainError

from conftest import check_gradients


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def test_tensor_from_list_and_1d():
    t = Tensor([[1.0, 2.0], [3.0, 4.0]])
    assert t.shape == (2, 2)
    v = Tensor([1.0, 2.0, 3.0])
    assert v.shape == (1, 3)


def test_tensor_rejects_non_finite():
    with pytest.raises(DomainError):
        Tensor([[1.0, float("nan")]])
    with pytest.raises(DomainError):
        Tensor([[float("inf")]])


def test_tensor_rejects_3d():
    with pytest.raises(DimensionError):
        Tensor(np.zeros((2, 2, 2)))


# ---------------------------------------------------------------------------
# matmul
# ---------------------------------------------------------------------------

def test_matmul_identity():
    a = Tensor([[1.0, 2.0], [3.0, 4.0]])
    out = ad.matmul(Tensor(np.eye(2)), a)
    assert np.array_equal(out.data, a.data)


def test_matmul_zero_annihilates():
    rng = np.random.default_rng(1)
    b = Tensor(rng.normal(size=(3, 4)))
    out = ad.matmul(Tensor(np.zeros((2, 3))), b)
    assert np.array_equal(out.data, np.zeros((2, 4)))


def test_matmul_hand_value():
    out = ad.matmul(Tensor([[1.0, 2.0], [3.0, 4.0]]), Tensor([[5.0], [6.0]]))
    assert np.array_equal(out.data, [[17.0], [39.0]])


def test_matmul_shape_mismatch_names_both_shapes():
    with pytest.raises(DimensionError, match=r"\(2, 2\).*\(3, 1\)"):
        ad.matmul(Tensor(np.zeros((2, 2))), Tensor(np.zeros((3, 1))))


def test_matmul_associative_on_random_chains():
    rng = np.random.default_rng(7)
    for _ in range(20):
        a = Tensor(rng.normal(size=(3, 4)))
        b = Tensor(rng.normal(size=(4, 5)))
        c = Tensor(rng.normal(size=(5, 2)))
        left = ad.matmul(ad.matmul(a, b), c).data
        right = ad.matmul(a, ad.matmul(b, c)).data
        assert np.max(np.abs(left - right)) < 1e-9


# ---------------------------------------------------------------------------
# softmax
# ---------------------------------------------------------------------------

def test_softmax_constant_vector_is_uniform():
    out = ad.softmax(Tensor([[3.7, 3.7, 3.7]]))
    assert np.allclose(out.data, [[1 / 3, 1 / 3, 1 / 3]], atol=1e-15)


def test_softmax_single_element_is_one():
    assert ad.softmax(Tensor([[123.4]])).data[0, 0] == 1.0


def test_softmax_closed_form():
    out = ad.softmax(Tensor([[0.0, math.log(2.0)]]))
    assert np.allclose(out.data, [[1 / 3, 2 / 3]], atol=1e-15)


def test_softmax_empty_is_domain_error():
    with pytest.raises(DomainError):
        ad.softmax(Tensor(np.zeros((1, 0))))


def test_softmax_sums_to_one_and_positive():
    rng = np.random.default_rng(11)
    for _ in range(50):
        x = Tensor(rng.normal(scale=50.0, size=(1, int(rng.integers(1, 12)))))
        out = ad.softmax(x).data
        assert abs(out.sum() - 1.0) < 1e-12
        assert (out > 0).all()


def test_softmax_permutation_equivariant():
    rng = np.random.default_rng(12)
    x = rng.normal(size=8)
    perm = rng.permutation(8)
    direct = ad.softmax(Tensor(x[perm])).data[0]
    permuted = ad.softmax(Tensor(x)).data[0][perm]
    assert np.allclose(direct, permuted, atol=1e-15)


def test_softmax_extreme_values_stable():
    out = ad.softmax(Tensor([[1e4, 0.0, -1e4]])).data
    assert np.isfinite(out).all() and abs(out.sum() - 1.0) < 1e-12


# ---------------------------------------------------------------------------
# cosine
# ---------------------------------------------------------------------------

def test_cosine_self_similarity_is_one():
    rng = np.random.default_rng(2)
    v = Tensor(rng.normal(size=(1, 5)))
    assert ad.cosine(v, v).item() == 1.0


def test_cosine_orthogonal_is_zero():
    assert ad.cosine(Tensor([[1.0, 0.0]]), Tensor([[0.0, 1.0]])).item() == 0.0


def test_cosine_hand_value():
    got = ad.cosine(Tensor([[1.0, 0.0]]), Tensor([[1.0, 1.0]])).item()
    assert abs(got - math.sqrt(2) / 2) < 1e-15


def test_cosine_zero_norm_is_domain_error():
    with pytest.raises(DomainError):
        ad.cosine(Tensor([[0.0, 0.0]]), Tensor([[1.0, 0.0]]))


def test_cosine_range():
    rng = np.random.default_rng(3)
    for _ in range(100):
        a = Tensor(rng.normal(size=(1, 4)))
        b = Tensor(rng.normal(size=(1, 4)))
        assert -1.0 <= ad.cosine(a, b).item() <= 1.0


def test_cosine_rows_matches_cosine():
    rng = np.random.default_rng(4)
    q = Tensor(rng.normal(size=(1, 6)))
    m = Tensor(rng.normal(size=(5, 6)))
    rows = ad.cosine_rows(q, m).data[0]
    singles = [ad.cosine(q, Tensor(m.data[i:i + 1])).item() for i in range(5)]
    assert np.allclose(rows, singles, atol=1e-15)


# ---------------------------------------------------------------------------
# backward
# ---------------------------------------------------------------------------

def test_backward_sum_gives_ones():
    w = Tensor(np.array([[1.0, -2.0], [0.5, 3.0]]))
    with Tape() as tape:
        loss = ad.sumall(w)
    grads = backward(tape, loss)
    assert np.array_equal(grads[w], np.ones((2, 2)))


def test_backward_zero_grads_on_detached_path():
    rng = np.random.default_rng(5)
    a = Tensor(rng.normal(size=(1, 4)))
    other = Tensor(rng.normal(size=(1, 4)))
    with Tape() as tape:
        b = ad.scale(a, 3.0)
        cut = b.detach()
        loss = ad.cosine(cut, other)
    grads = backward(tape, loss)
    assert np.array_equal(grads[a], np.zeros((1, 4)))
    assert np.array_equal(grads[b], np.zeros((1, 4)))
    assert cut in grads  # the detached leaf itself does accumulate


def test_backward_unused_parameter_reads_zero():
    rng = np.random.default_rng(6)
    used = Tensor(rng.normal(size=(2, 2)))
    unused = Tensor(rng.normal(size=(3, 3)))
    with Tape() as tape:
        loss = ad.sumall(ad.matmul(used, used))
    grads = backward(tape, loss)
    assert np.array_equal(grads[unused], np.zeros((3, 3)))


def test_backward_requires_scalar_loss():
    w = Tensor(np.ones((2, 2)))
    with Tape() as tape:
        out = ad.add(w, w)
    with pytest.raises(ContractError):
        backward(tape, out)


def test_backward_requires_loss_from_this_tape():
    w = Tensor(np.ones((1, 1)))
    with Tape() as tape:
        ad.scale(w, 2.0)
    foreign = Tensor(np.ones((1, 1)))
    with pytest.raises(ContractError):
        backward(tape, foreign)


def test_backward_composite_graph_matches_finite_differences():
    rng = np.random.default_rng(8)
    d = 8
    w1 = Tensor(rng.normal(size=(d, d)), name="w1")
    w2 = Tensor(rng.normal(size=(d, 3)), name="w2")
    x = Tensor(rng.normal(size=(1, d)), name="x")
    ref = Tensor(rng.normal(size=(1, 3)), name="ref")

    def run():
        with Tape() as tape:
            hidden = ad.matmul(x, w1)
            weights = ad.softmax(ad.scale(hidden, 0.3))
            projected = ad.matmul(weights, w2)
            sim = ad.cosine(projected, ref)
            spread = ad.log1p_sum_exp(ad.sub_scalar(ad.exp(ad.scale(hidden, 0.1)), sim))
            loss = ad.add(spread, ad.sumall(ad.div(projected, ad.exp(ref))))
        return tape, loss

    tape, loss = run()
    grads = backward(tape, loss)
    worst = check_gradients(
        lambda: run()[1].item(),
        {"w1": w1, "w2": w2, "x": x, "ref": ref},
        grads, rng, entries_per_tensor=5)
    assert worst < 1e-4


@pytest.mark.parametrize("name", [
    "matmul", "transpose", "add", "sub", "sub_scalar", "scale", "div", "exp",
    "log", "sumall", "softmax", "cosine", "cosine_rows", "log_sum_exp",
    "log1p_sum_exp", "concat_cols",
])
def test_each_primitive_gradient(name):
    rng = np.random.default_rng(hash(name) % 2**31)
    a = Tensor(rng.uniform(0.5, 2.0, size=(2, 3)), name="a")
    b = Tensor(rng.uniform(0.5, 2.0, size=(3, 2)), name="b")
    row = Tensor(rng.normal(size=(1, 4)), name="row")
    row2 = Tensor(rng.normal(size=(1, 4)), name="row2")
    mat = Tensor(rng.normal(size=(3, 4)), name="mat")
    scalar = Tensor(rng.uniform(0.5, 1.5, size=(1, 1)), name="scalar")

    builders = {
        "matmul": (lambda: ad.sumall(ad.matmul(a, b)), {"a": a, "b": b}),
        "transpose": (lambda: ad.sumall(ad.matmul(ad.transpose(a), a)), {"a": a}),
        "add": (lambda: ad.sumall(ad.add(a, a)), {"a": a}),
        "sub": (lambda: ad.sumall(ad.exp(ad.sub(a, a))), {"a": a}),
        "sub_scalar": (lambda: ad.sumall(ad.exp(ad.sub_scalar(row, scalar))),
                       {"row": row, "scalar": scalar}),
        "scale": (lambda: ad.sumall(ad.scale(a, -1.7)), {"a": a}),
        "div": (lambda: ad.sumall(ad.div(a, ad.exp(a))), {"a": a}),
        "exp": (lambda: ad.sumall(ad.exp(a)), {"a": a}),
        "log": (lambda: ad.sumall(ad.log(a)), {"a": a}),
        "sumall": (lambda: ad.sumall(a), {"a": a}),
        "softmax": (lambda: ad.sumall(ad.exp(ad.softmax(row))), {"row": row}),
        "cosine": (lambda: ad.cosine(row, row2), {"row": row, "row2": row2}),
        "cosine_rows": (lambda: ad.sumall(ad.exp(ad.cosine_rows(row, mat))),
                        {"row": row, "mat": mat}),
        "log_sum_exp": (lambda: ad.log_sum_exp(row), {"row": row}),
        "log1p_sum_exp": (lambda: ad.log1p_sum_exp(row), {"row": row}),
        "concat_cols": (lambda: ad.sumall(ad.exp(ad.concat_cols([row, row2]))),
                        {"row": row, "row2": row2}),
    }
    build, leaves = builders[name]

    def run():
        with Tape() as tape:
            loss = build()
        return tape, loss

    tape, loss = run()
    grads = backward(tape, loss)
    check_gradients(lambda: run()[1].item(), leaves, grads, rng, entries_per_tensor=4)


def test_gradient_accumulates_across_reuses():
    w = Tensor(np.array([[2.0]]))
    with Tape() as tape:
        loss = ad.add(ad.scale(w, 3.0), ad.scale(w, 4.0))
    grads = backward(tape, loss)
    assert grads[w][0, 0] == 7.0


def test_nested_tapes_record_independently():
    w = Tensor(np.array([[1.5]]))
    with Tape() as outer:
        ad.scale(w, 2.0)
        with Tape() as inner:
            inner_loss = ad.scale(w, 5.0)
        outer_loss = ad.scale(w, 3.0)
    assert len(inner) == 1
    inner_grads = backward(inner, inner_loss)
    outer_grads = backward(outer, outer_loss)
    assert inner_grads[w][0, 0] == 5.0
    assert outer_grads[w][0, 0] == 3.0  # inner record not on outer tape
