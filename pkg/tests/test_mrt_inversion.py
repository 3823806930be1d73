import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tensortomo import samples
from tensortomo.mrt_inversion import (
    ComplexDirection,
    MomentRangeError,
    SamplingError,
    binomial_reduce,
    complex_moment,
    eta_samples,
    injectivity_verdict,
    isotropic_slice_witness,
    moment_table,
    reduced_eval,
)
from tensortomo.tensor_algebra import SymTensor, TensorRankError, eval_power, i_delta, i_delta_components, num_components, symmetrize
from tensortomo.tensor_fields import bump, cube_grid

GRID = cube_grid(3, 33)


def test_null_vectors():
    for d in eta_samples(3, 16):
        w = d.null_vector
        assert abs(w @ w) < 1e-15
        assert d.eta[0] == 0
    with pytest.raises(ValueError):
        ComplexDirection([0.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        ComplexDirection([0.6, 0.8, 0.0])


@given(m=st.integers(0, 4), seed=st.integers(0, 2**32 - 1), theta=st.floats(0, 2 * np.pi))
def test_binomial_reduction_identity(m, seed, theta):
    rng = np.random.default_rng(seed)
    F = symmetrize(rng.normal(size=(3,) * m) + 1j * rng.normal(size=(3,) * m), 3)
    eta = np.array([0.0, np.cos(theta), np.sin(theta)])
    fam = binomial_reduce(F)
    assert [t.m for t in fam] == list(range(m + 1))
    assert all(t.n == 2 for t in fam)
    want = eval_power(F, np.array([1.0, 0, 0]) + 1j * eta)
    assert reduced_eval(fam, eta) == pytest.approx(want, rel=1e-12, abs=1e-12)


@given(m=st.integers(0, 3), seed=st.integers(0, 2**32 - 1))
def test_isotropic_tensors_annihilated(m, seed):
    rng = np.random.default_rng(seed)
    v = SymTensor(3, m, rng.normal(size=num_components(3, m)) + 0j)
    for d in eta_samples(3, 8):
        assert abs(eval_power(i_delta(v), d.null_vector)) < 1e-12 * max(1.0, v.norm())


def test_complex_moment_matches_profile_quadrature():
    f = samples.bump_field(1, GRID, (0.02, 0.05, -0.03), (0.35, 0.3, 0.3), [0.7, -0.4, 0.9])
    d = eta_samples(3, 16)[3]
    c = np.array([0.7, -0.4, 0.9]) @ d.null_vector
    x3 = GRID[1][2] + 17 * GRID[2][2]
    s = np.linspace(-0.5, 0.5, 40001)
    pts = np.stack([np.zeros_like(s), s, np.full_like(s, x3)])
    prof = bump(pts, (0.02, 0.05, -0.03), (0.35, 0.3, 0.3))
    for k in range(2):
        want = c * np.trapezoid(s**k * prof, s)
        got = complex_moment(f, k, d, [x3])
        assert abs(got - want) < 2e-3 * abs(c)
    with pytest.raises(MomentRangeError):
        complex_moment(f, 2, d, [x3])


def test_verdict_zero_field():
    f = samples.sample_field(1, num=33) * 0.0
    v = injectivity_verdict(f)
    assert v.kind == "zero" and v.max_moment == 0


@pytest.mark.parametrize("m", [0, 1])
def test_verdict_nonzero_low_rank(m):
    f = samples.sample_field(m, num=33, seed=4)
    v = injectivity_verdict(f)
    assert v.kind == "nonzero"
    assert v.max_moment > 1e6 * v.noise_floor
    assert v.offending is not None


def test_verdict_partially_isotropic():
    base = samples.sample_field(1, num=33, seed=5)
    f = base.with_data(i_delta_components(base.data, 3, 1), m=3)
    v = injectivity_verdict(f)
    assert v.kind == "partially_isotropic"
    assert v.residual < 1e-12 * f.sup_norm()
    assert v.witness.shape[-1] == num_components(3, 1)


def test_verdict_nonzero_rank2_generic():
    f = samples.sample_field(2, num=33, seed=6)
    assert injectivity_verdict(f).kind == "nonzero"


def test_support_away_from_slice_is_invisible():
    f = samples.bump_field(1, GRID, (0.3, 0.0, 0.0), (0.15, 0.3, 0.3), [1.0, 2.0, 3.0])
    assert injectivity_verdict(f).kind == "zero"


def test_sampling_requirements():
    f = samples.sample_field(2, num=17)
    with pytest.raises(SamplingError):
        injectivity_verdict(f, eta_samples(3, 5))
    repeated = eta_samples(3, 4) * 3
    with pytest.raises(SamplingError):
        injectivity_verdict(f, repeated)
    injectivity_verdict(f, eta_samples(3, 6))


def test_witness_rank_error():
    with pytest.raises(TensorRankError):
        isotropic_slice_witness(samples.sample_field(1, num=9))


def test_table_csv_has_units_row():
    t = moment_table(samples.sample_field(1, num=9), eta_samples(3, 4))
    lines = t.to_csv().splitlines()
    assert lines[0].split(",")[:2] == ["k", "eta_theta"]
    assert lines[1].split(",")[1] == "rad"
    assert len(lines) == 2 + len(t.values)


def test_scalar_slice_moment_and_odd_symmetry():
    f = samples.bump_field(0, GRID, (0.0, 0.0, 0.0), (0.3, 0.3, 0.3), [1.0])
    d = eta_samples(3, 16)[0]
    x3 = GRID[1][2] + 14 * GRID[2][2]
    s = np.linspace(-0.5, 0.5, 40001)
    prof = bump(np.stack([0 * s, s, np.full_like(s, x3)]), (0.0, 0.0, 0.0), (0.3, 0.3, 0.3))
    assert complex_moment(f, 0, d, [x3]) == pytest.approx(np.trapezoid(prof, s), rel=2e-3)
    dims, origin, spacing = GRID
    mesh = f.mesh()
    odd = f.with_data(f.data * mesh[1][..., None])
    assert abs(complex_moment(odd, 0, d, [x3])) < 1e-15


def test_rank1_reduction_reads_components(rng):
    F = SymTensor(3, 1, rng.normal(size=3) + 0j)
    f0, f1 = binomial_reduce(F)
    np.testing.assert_array_equal(f0.components, F.components[:1])
    np.testing.assert_array_equal(f1.components, F.components[1:])
    top = binomial_reduce(symmetrize(rng.normal(size=(3, 3, 3)), 3))[-1]
    assert top.n == 2 and top.m == 3


def test_moment_linearity_and_scale_invariant_verdict():
    f = samples.sample_field(1, num=33, seed=7)
    g = samples.sample_field(1, num=33, seed=8)
    d = eta_samples(3, 16)[5]
    x3 = GRID[1][2] + 15 * GRID[2][2]
    alpha = 1.5 - 2j
    lhs = complex_moment(f * alpha + g, 1, d, [x3])
    rhs = alpha * complex_moment(f, 1, d, [x3]) + complex_moment(g, 1, d, [x3])
    assert lhs == pytest.approx(rhs, rel=1e-13)
    base = samples.sample_field(0, num=33, seed=9)
    iso = base.with_data(i_delta_components(base.data, 3, 0), m=2)
    kinds = {injectivity_verdict(iso * a).kind for a in (1.0, 1e-6, 1e6, -3.0j)}
    assert kinds == {"partially_isotropic"}
