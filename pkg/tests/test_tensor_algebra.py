import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tensortomo.tensor_algebra import (
    SymTensor,
    TensorRankError,
    TensorSizeError,
    eval_power,
    eval_power_dense,
    i_delta,
    isotropy_project,
    isotropy_project_components,
    kronecker_delta,
    mixed_weights,
    multi_indices,
    multiplicities,
    num_components,
    power_weights,
    sym_product,
    symmetrize,
    symmetrize_dense,
)


def perm_average(raw):
    """Oracle: explicit average over all axis permutations."""
    m = raw.ndim
    perms = list(itertools.permutations(range(m)))
    return sum(np.transpose(raw, p) for p in perms) / len(perms)


def rand_sym(rng, n, m):
    raw = rng.normal(size=(n,) * m) + 1j * rng.normal(size=(n,) * m)
    if m == 0:
        return SymTensor(n, 0, [raw])
    return SymTensor.from_dense(perm_average(raw))


dims = st.integers(2, 4)
ranks = st.integers(0, 3)
seeds = st.integers(0, 2**32 - 1)


def test_component_counts():
    for n, m in [(3, 0), (3, 1), (3, 2), (3, 3), (4, 3)]:
        assert len(multi_indices(n, m)) == math.comb(n + m - 1, m) == num_components(n, m)
    # multiplicities count all n**m index tuples
    assert multiplicities(3, 3).sum() == 27


def test_dense_round_trip(rng):
    t = rand_sym(rng, 3, 3)
    np.testing.assert_allclose(SymTensor.from_dense(t.to_dense()).components, t.components)
    assert t[(2, 0, 1)] == t[(0, 1, 2)]


def test_from_dense_rejects_asymmetric():
    raw = np.zeros((3, 3))
    raw[0, 1] = 1.0
    with pytest.raises(ValueError):
        SymTensor.from_dense(raw)


@given(dims, ranks, seeds)
def test_symmetrize_matches_permutation_average(n, m, seed):
    raw = np.random.default_rng(seed).normal(size=(n,) * m)
    np.testing.assert_allclose(symmetrize_dense(raw), perm_average(raw), atol=1e-13)
    np.testing.assert_allclose(symmetrize(raw, n).to_dense(), perm_average(raw), atol=1e-13)


@given(dims, ranks, seeds)
def test_symmetrize_idempotent(n, m, seed):
    raw = np.random.default_rng(seed).normal(size=(n,) * m)
    once = symmetrize_dense(raw)
    np.testing.assert_allclose(symmetrize_dense(once), once, atol=1e-13)


@given(dims, ranks, ranks, seeds)
def test_sym_product_matches_dense_oracle(n, m, k, seed):
    rng = np.random.default_rng(seed)
    f, g = rand_sym(rng, n, m), rand_sym(rng, n, k)
    dense = perm_average(np.multiply.outer(f.to_dense(), g.to_dense()))
    np.testing.assert_allclose(sym_product(f, g).to_dense(), dense, atol=1e-12)


@given(dims, ranks, ranks, seeds)
def test_sym_product_commutes(n, m, k, seed):
    rng = np.random.default_rng(seed)
    f, g = rand_sym(rng, n, m), rand_sym(rng, n, k)
    assert (sym_product(f, g) - sym_product(g, f)).norm() <= 1e-12


def test_sym_product_of_vectors():
    e1 = SymTensor(3, 1, [1, 0, 0])
    e2 = SymTensor(3, 1, [0, 1, 0])
    p = sym_product(e1, e2)
    assert p[(0, 1)] == pytest.approx(0.5)
    assert p[(1, 0)] == pytest.approx(0.5)
    assert p[(0, 0)] == 0


@given(dims, ranks, seeds)
def test_eval_power_matches_dense_sum(n, m, seed):
    rng = np.random.default_rng(seed)
    f = rand_sym(rng, n, m)
    w = rng.normal(size=n) + 1j * rng.normal(size=n)
    assert eval_power(f, w) == pytest.approx(eval_power_dense(f.to_dense(), w), rel=1e-12, abs=1e-12)


@given(dims, ranks, seeds)
def test_i_delta_contraction_identity(n, m, seed):
    rng = np.random.default_rng(seed)
    f = rand_sym(rng, n, m)
    w = rng.normal(size=n) + 1j * rng.normal(size=n)
    lhs = eval_power(i_delta(f), w)
    assert lhs == pytest.approx((w @ w) * eval_power(f, w), rel=1e-12, abs=1e-12)


def test_i_delta_annihilated_by_null_vector(rng):
    f = rand_sym(rng, 3, 2)
    w = np.array([1.0, 1j * np.cos(0.3), 1j * np.sin(0.3)])
    assert abs(eval_power(i_delta(f), w)) < 1e-14


def test_kronecker_delta_components():
    d = kronecker_delta(3)
    np.testing.assert_array_equal(d.to_dense(), np.eye(3))


def test_power_weights_batch(rng):
    f = rand_sym(rng, 3, 3)
    ws = rng.normal(size=(5, 3)) + 1j * rng.normal(size=(5, 3))
    batch = power_weights(3, 3, ws) @ f.components
    np.testing.assert_allclose(batch, [eval_power(f, w) for w in ws], rtol=1e-13)
    with pytest.raises(TensorSizeError):
        power_weights(3, 2, np.ones(4))


@given(st.integers(0, 3), st.integers(0, 3), seeds)
def test_mixed_weights_match_dense_contraction(p, q, seed):
    rng = np.random.default_rng(seed)
    f = rand_sym(rng, 3, p + q)
    a = rng.normal(size=3) + 1j * rng.normal(size=3)
    b = rng.normal(size=3)
    dense = f.to_dense()
    for v in [a] * p + [b] * q:
        dense = dense @ v if dense.ndim else dense
    got = mixed_weights(3, [a] * p + [b] * q) @ f.components
    assert got == pytest.approx(complex(dense), rel=1e-12, abs=1e-12)


@given(st.integers(2, 4), st.integers(0, 2), seeds)
def test_isotropy_project_recovers_generator(n, k, seed):
    rng = np.random.default_rng(seed)
    v = rand_sym(rng, n, k)
    got, res = isotropy_project(i_delta(v))
    assert res <= 1e-12 * max(1.0, v.norm())
    assert (got - v).norm() <= 1e-10 * max(1.0, v.norm())


def test_isotropy_project_traceless_is_orthogonal():
    # e1 e1 - e2 e2 is trace free, hence orthogonal to the range of i_delta
    f = SymTensor.from_dense(np.diag([1.0, -1.0, 0.0]))
    v, res = isotropy_project(f)
    assert abs(v[()]) < 1e-14
    assert res == pytest.approx(f.norm(), rel=1e-14)


def test_isotropy_project_batched_and_rank_error(rng):
    f = np.stack([rand_sym(rng, 3, 2).components for _ in range(4)])
    v, res = isotropy_project_components(f, 3, 2)
    for i in range(4):
        vi, ri = isotropy_project(SymTensor(3, 2, f[i]))
        np.testing.assert_allclose(v[i], vi.components, atol=1e-13)
        assert res[i] == pytest.approx(ri, abs=1e-13)
    with pytest.raises(TensorRankError):
        isotropy_project(SymTensor(3, 1, [1, 2, 3]))


def test_projection_residual_is_distance(rng):
    # residual equals |f - i_delta v| in the full Frobenius norm
    f = rand_sym(rng, 3, 3)
    v, res = isotropy_project(f)
    assert res == pytest.approx(np.linalg.norm((f - i_delta(v)).to_dense()), rel=1e-12)
    # and no perturbation of v does better
    for _ in range(5):
        dv = rand_sym(rng, 3, 1) * 1e-3
        assert np.linalg.norm((f - i_delta(v + dv)).to_dense()) >= res - 1e-14


def test_size_mismatch_errors():
    with pytest.raises(TensorSizeError):
        SymTensor(3, 2, np.zeros(5))
    with pytest.raises(TensorSizeError):
        SymTensor(3, 1, [1, 0, 0]) + SymTensor(3, 2, np.zeros(6))
    with pytest.raises(TensorSizeError):
        eval_power(SymTensor(3, 1, [1, 0, 0]), [1, 0])
