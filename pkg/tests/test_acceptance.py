"""Acceptance criteria, each at its stated tolerance and runtime budget.

Every test records a single PASS/FAIL line, printed together at the end of the
pytest run.
"""
import time

import numpy as np
import pytest

from tensortomo import cgo, mrt_inversion, recovery, samples, verify
from tensortomo.cgo import Amplitude, RotatedFrame, TransverseBump, amplitude_family, build_phases, dzbar_grid
from tensortomo.ray_transform import Ray, momentum_transform, ray_transform
from tensortomo.tensor_algebra import i_delta_components
from tensortomo.tensor_fields import GridField, cube_grid, inner_derivative, saint_venant

E1, E2, E3 = np.eye(3)


def _random_bundle(rng):
    Q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    h = rng.uniform(0.01, 0.5)
    return build_phases(Q[:, 0], Q[:, 1], rng.uniform(-1.9, 1.9) / h * Q[:, 2], h)


def test_criterion_01_tensor_algebra(criterion):
    t0 = time.perf_counter()
    checks = verify.algebra_suite(np.random.default_rng(1), cases=200)
    dt = time.perf_counter() - t0
    worst = max(c.value for c in checks)
    ok = worst <= 1e-12 and dt < 5
    assert criterion(1, "tensor algebra identities", ok, f"max error {worst:.2e} (<= 1e-12), {dt:.2f} s (< 5 s)")


def test_criterion_02_kernel_properties(criterion):
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    worst_I = worst_W = 0.0
    for trial in range(20):
        v = samples.random_potential(trial % 2, rng, num=65)
        dv = inner_derivative(v)
        scale = v.sup_norm()
        for _ in range(10):
            xi = rng.normal(size=3)
            ray = Ray(rng.uniform(-0.2, 0.2, 3), xi / np.linalg.norm(xi))
            worst_I = max(worst_I, abs(ray_transform(dv, ray)) / scale)
        h = float(v.spacing[0])
        worst_W = max(worst_W, saint_venant(dv).sup_norm() / (h**2 * scale))
    dt = time.perf_counter() - t0
    ok = worst_I <= 1e-4 and worst_W <= 10 and dt < 120
    detail = f"max |I(dv)|/|v| {worst_I:.2e} (<= 1e-4), max |W(dv)|/(h^2 |v|) {worst_W:.2e} (<= 10), {dt:.1f} s (< 120 s)"
    assert criterion(2, "ray transform and Saint Venant kill potentials", ok, detail)


def test_criterion_03_shift_identity(criterion):
    import math

    rng = np.random.default_rng(3)
    f = samples.sample_field(2, num=65, seed=3)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        xi = rng.normal(size=3)
        ray = Ray(rng.uniform(-0.2, 0.2, 3), xi / np.linalg.norm(xi))
        a = float(rng.uniform(-0.3, 0.3))
        base = [momentum_transform(f, ray, j) for j in range(4)]
        for k in range(4):
            lhs = momentum_transform(f, ray.shifted(a), k)
            rhs = sum(math.comb(k, j) * (-a) ** (k - j) * base[j] for j in range(k + 1))
            worst = max(worst, abs(lhs - rhs) / abs(rhs))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-8 and dt < 30
    assert criterion(3, "momentum shift identity", ok, f"max relative error {worst:.2e} (<= 1e-8), {dt:.2f} s (< 30 s)")


def test_criterion_04_phase_algebra(criterion):
    rng = np.random.default_rng(4)
    t0 = time.perf_counter()
    null = conj = prod = 0.0
    for _ in range(50):
        b = _random_bundle(rng)
        null = max(null, abs(b.zeta1 @ b.zeta1), abs(b.zeta2 @ b.zeta2))
        conj = max(conj, float(np.abs(b.zeta1 + np.conj(b.zeta2) - 1j * b.h * b.xi).max()))
        x = rng.uniform(-1, 1, (1000, 3))
        prod = max(prod, float(cgo.exp_products(b, x).relative_mismatch().max()))
    dt = time.perf_counter() - t0
    ok = null <= 1e-13 and conj <= 1e-13 and prod <= 1e-10 and dt < 5
    detail = f"zeta.zeta {null:.1e}, zeta1+conj(zeta2)-ih xi {conj:.1e} (<= 1e-13), products {prod:.1e} (<= 1e-10), {dt:.2f} s (< 5 s)"
    assert criterion(4, "zeta algebra and product identities", ok, detail)


def test_criterion_05_null_vector_moments(criterion):
    t0 = time.perf_counter()
    worst = 0.0
    for m in (2, 3):
        for seed in range(3):
            v = samples.sample_field(m - 2, num=65, seed=seed)
            f = v.with_data(i_delta_components(v.data, 3, m - 2), m=m)
            table = mrt_inversion.moment_table(f, mrt_inversion.eta_samples(3, 16))
            worst = max(worst, table.max_abs() / mrt_inversion.verdict_scale(f))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-10 and dt < 60
    assert criterion(5, "null-vector moments of i_delta fields", ok, f"max |moment|/scale {worst:.2e} (<= 1e-10), {dt:.1f} s (< 60 s)")


def test_criterion_06_injectivity_verdicts(criterion):
    t0 = time.perf_counter()
    margins = []
    kinds_ok = True
    for m in (0, 1):
        for seed in range(3):
            v = mrt_inversion.injectivity_verdict(samples.sample_field(m, num=65, seed=seed))
            kinds_ok &= v.kind == "nonzero"
            margins.append(v.max_moment / max(v.noise_floor, 1e-300))
        z = mrt_inversion.injectivity_verdict(samples.sample_field(m, num=65) * 0.0)
        kinds_ok &= z.kind == "zero"
    residual = 0.0
    for seed in range(3):
        v = samples.sample_field(0, num=65, seed=seed)
        f = v.with_data(i_delta_components(v.data, 3, 0), m=2)
        res = mrt_inversion.injectivity_verdict(f)
        kinds_ok &= res.kind == "partially_isotropic"
        residual = max(residual, res.residual / res.scale)
    dt = time.perf_counter() - t0
    margin = min(margins)
    ok = kinds_ok and margin >= 10 and residual <= 1e-6 and dt < 120
    detail = f"verdict kinds {'as expected' if kinds_ok else 'WRONG'}, min margin {margin:.1e} (>= 10), witness residual {residual:.1e} (<= 1e-6), {dt:.1f} s (< 120 s)"
    assert criterion(6, "injectivity verdicts", ok, detail)


def test_criterion_07_cross_term_decay(criterion):
    t0 = time.perf_counter()
    table = recovery.decay_sweep(samples.decay_wset(65), E3, E1, np.zeros(3))
    dt = time.perf_counter() - t0
    rp, rm = table.ratios("cross_plus"), table.ratios("cross_minus")
    ok = table.passes(0.7) and dt < 180
    detail = f"ratios + {' '.join(f'{r:.3f}' for r in rp)}, - {' '.join(f'{r:.3f}' for r in rm)} (<= 0.7), {dt:.1f} s (< 180 s)"
    assert criterion(7, "cross-term decay per h halving", ok, detail)


def test_criterion_08_transport_and_amplitudes(criterion):
    t0 = time.perf_counter()
    frame = RotatedFrame(np.eye(3))
    dims, origin, spacing = cube_grid(3, 65)
    pts = GridField.zeros(3, 0, dims, origin, spacing).points().reshape(dims + (3,))
    h2 = float(spacing[0]) ** 2
    worst = 0.0
    g = TransverseBump((0.0,), 0.45)
    for m in (1, 2, 3):
        inner = (slice(m, -m),) * 2 + (slice(None),)
        for l in range(m):
            for lam in (-1.0, 0.0, 1.0):
                a0, b0 = amplitude_family(l, l, lam, g, frame, m)
                for amp in (a0, b0):
                    arr = amp(pts)
                    for _ in range(m):
                        arr = dzbar_grid(arr, spacing)
                    worst = max(worst, float(np.abs(arr[inner]).max() / np.abs(amp(pts)).max()) / h2)
    T1 = cgo.transport_apply(frame, Amplitude(frame, {1: 1.0}))
    T2 = cgo.transport_apply(frame, T1)
    closed_ok = T1.degree == 0 and T1.constant_value() not in (None, 0) and T2.is_zero()
    dt = time.perf_counter() - t0
    ok = worst <= 10 and closed_ok and dt < 30
    detail = f"max dzbar^m residual / h^2 {worst:.2e} (<= 10), T(z - zbar) = {T1.constant_value().real:g}, T^2 (z - zbar) = 0 {'yes' if T2.is_zero() else 'no'}, {dt:.1f} s (< 30 s)"
    assert criterion(8, "transport and amplitude family", ok, detail)


def test_criterion_09_end_to_end_recovery(criterion):
    grid = samples.half_grid(65)
    skew = [None, None, samples.DECAY_SKEW]
    zero = recovery.CoefficientSet.zeros(3, 2, *grid)
    runs = {}
    t0 = time.perf_counter()
    rep = recovery.induction_driver(zero)
    runs["zero"] = time.perf_counter() - t0
    a_ok = rep.verdict == "equal" and max(s.max_moment for s in rep.stages) <= 1e-10

    W1 = samples.bump_field(1, grid, (0.05, 0.0, 0.5), (0.3, 0.3, 0.35), [0.8, -0.5, 0.6], skew)
    t0 = time.perf_counter()
    rep = recovery.induction_driver(zero.replace(1, W1))
    runs["top"] = time.perf_counter() - t0
    f = rep.failure
    b_ok = rep.verdict == "different" and f is not None and (f.j, f.l) == (0, 0)

    Wbar = samples.bump_field(0, grid, (0.0, 0.05, 0.5), (0.3, 0.3, 0.35), [0.7], skew)
    t0 = time.perf_counter()
    rep = recovery.induction_driver(zero.replace("bar", Wbar))
    runs["generator"] = time.perf_counter() - t0
    f = rep.failure
    c_ok = rep.verdict == "different" and f is not None and f.l == 1 and rep.stages[0].passed

    time_ok = max(runs.values()) < 300
    ok = a_ok and b_ok and c_ok and time_ok
    detail = (
        f"(a) zero set equal {a_ok}, (b) planted W^1 flagged at first stage {b_ok}, "
        f"(c) planted generator flagged at a0 = z - zbar {c_ok}, slowest run {max(runs.values()):.1f} s (< 300 s)"
    )
    assert criterion(9, "end-to-end recovery", ok, detail)


def test_criterion_10_fourier_cross_check(criterion):
    W = samples.fourier_wset()
    E = W.extended(0)
    xi2 = 2 * np.pi / (E.dims[1] * E.spacing[1])
    X = np.fft.fftn(E.data[..., 0])
    oracle = np.exp(1j * xi2 * E.origin[1]) * X[0, (-1) % E.dims[1], 0] * E.cell_volume
    errs = []
    for h in recovery.DEFAULT_HS:
        b = build_phases(E3, E1, [0, xi2, 0], h)
        one = Amplitude(b.frame())
        errs.append(abs(recovery.limiting_integral(W, b, one, one, 0) - oracle) / abs(oracle))
    ok = errs[-1] <= 1e-6
    detail = "relative error " + ", ".join(f"h={h:g}: {e:.1e}" for h, e in zip(recovery.DEFAULT_HS, errs)) + " (<= 1e-6 at h = 0.025)"
    assert criterion(10, "limit integral against DFT oracle", ok, detail)
