"""Invariant suites run by ``tensortomo --mode verify``.

Each suite returns a list of :class:`Check` records; a check passes when its
measured value is at most its threshold.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import cgo, mrt_inversion, ray_transform, recovery, samples
from .tensor_algebra import (
    SymTensor,
    eval_power,
    i_delta,
    i_delta_components,
    sym_product,
    symmetrize,
    symmetrize_dense,
)
from .tensor_fields import inner_derivative, saint_venant


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    value: float
    threshold: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.threshold)


def _rand_sym(rng, n, m) -> SymTensor:
    raw = rng.normal(size=(n,) * m) + 1j * rng.normal(size=(n,) * m)
    return symmetrize(raw, n)


def algebra_suite(rng, cases: int = 200) -> list[Check]:
    idem = comm = contr = 0.0
    for _ in range(cases):
        n = int(rng.integers(2, 5))
        m, k = int(rng.integers(0, 4)), int(rng.integers(0, 3))
        raw = rng.normal(size=(n,) * m)
        once = symmetrize_dense(raw)
        idem = max(idem, float(np.abs(symmetrize_dense(once) - once).max(initial=0.0)))
        f, g = _rand_sym(rng, n, m), _rand_sym(rng, n, k)
        comm = max(comm, (sym_product(f, g) - sym_product(g, f)).norm())
        w = rng.normal(size=n) + 1j * rng.normal(size=n)
        lhs = eval_power(i_delta(f), w)
        rhs = (w @ w) * eval_power(f, w)
        contr = max(contr, abs(lhs - rhs) / max(1.0, abs(rhs)))
    return [
        Check("algebra", "symmetrize idempotent", idem, 1e-12),
        Check("algebra", "sym product commutes", comm, 1e-12),
        Check("algebra", "eval(i_delta f, w) = (w.w) eval(f, w)", contr, 1e-12),
    ]


def fields_suite(rng) -> list[Check]:
    v = samples.random_potential(1, rng, num=33)
    Wd = saint_venant(inner_derivative(v))
    h = float(v.spacing[0])
    return [Check("fields", "W(dv) = 0", Wd.sup_norm(), 10 * h**2 * v.sup_norm())]


def ray_suite(rng, rays: int = 20) -> list[Check]:
    f = samples.sample_field(2, num=33, seed=int(rng.integers(1 << 31)))
    worst = 0.0
    for _ in range(rays):
        xi = rng.normal(size=3)
        ray = ray_transform.Ray(rng.uniform(-0.2, 0.2, 3), xi / np.linalg.norm(xi))
        a = float(rng.uniform(-0.3, 0.3))
        base = [ray_transform.momentum_transform(f, ray, j) for j in range(4)]
        for k in range(4):
            lhs = ray_transform.momentum_transform(f, ray.shifted(a), k)
            rhs = sum(math.comb(k, j) * (-a) ** (k - j) * base[j] for j in range(k + 1))
            worst = max(worst, abs(lhs - rhs) / max(abs(rhs), 1e-300))
    return [Check("ray", "momentum shift identity", worst, 1e-8)]


def cgo_suite(rng) -> list[Check]:
    b = cgo.build_phases([0, 0, 1], [1, 0, 0], [0, 2.0, 0], 0.1)
    null = max(abs(b.zeta1 @ b.zeta1), abs(b.zeta2 @ b.zeta2))
    conj = float(np.abs(b.zeta1 + np.conj(b.zeta2) - 1j * b.h * b.xi).max())
    x = rng.uniform(-1, 1, (1000, 3))
    prod = float(cgo.exp_products(b, x).relative_mismatch().max())
    W = samples.decay_wset(num=33)
    ext = W.extended(1)
    half = ext.dims[2] // 2
    upper = ext.data[:, :, half + 1 :]
    lower = np.flip(ext.data[:, :, :half], axis=2)
    parity = float(np.abs(lower - upper * cgo.reflection_signs(3, 1)).max())
    fr = b.frame()
    Ta = cgo.transport_apply(fr, cgo.Amplitude(fr, {1: 1.0}))
    TTa = cgo.transport_apply(fr, Ta)
    return [
        Check("cgo", "zeta . zeta = 0", null, 1e-13),
        Check("cgo", "zeta1 + conj(zeta2) = i h xi", conj, 1e-13),
        Check("cgo", "exponential product identities", prod, 1e-10),
        Check("cgo", "reflection parity", parity, 0.0),
        Check("cgo", "T(z - zbar) nonzero constant", 0.0 if Ta.degree == 0 and Ta.coeffs[0] != 0 else 1.0, 0.0),
        Check("cgo", "T^2 (z - zbar) = 0", 0.0 if TTa.is_zero() else 1.0, 0.0),
    ]


def mrt_suite(rng) -> list[Check]:
    v = samples.sample_field(0, num=33, seed=int(rng.integers(1 << 31)))
    f = v.with_data(i_delta_components(v.data, 3, 0), m=2)
    table = mrt_inversion.moment_table(f)
    scale = mrt_inversion.verdict_scale(f)
    verdict = mrt_inversion.injectivity_verdict(f)
    return [
        Check("mrt", "null-vector moments of i_delta v", table.max_abs() / scale, 1e-10),
        Check("mrt", "verdict partially_isotropic", 0.0 if verdict.kind == "partially_isotropic" else 1.0, 0.0),
    ]


def recovery_suite(rng) -> list[Check]:
    dims, origin, spacing = samples.half_grid(33)
    zero = recovery.CoefficientSet.zeros(3, 2, dims, origin, spacing)
    report = recovery.induction_driver(zero, thetas=recovery.default_thetas(8))
    W = samples.decay_wset(num=33)
    b = cgo.build_phases([0, 0, 1], [1, 0, 0], [0, 0, 0], 0.1)
    one = cgo.Amplitude(b.frame())
    alpha = complex(rng.normal(), rng.normal())
    lhs = recovery.limiting_integral(W.scaled(alpha), b, one, one, 1)
    rhs = alpha * recovery.limiting_integral(W, b, one, one, 1)
    return [
        Check("recovery", "zero set verdict equal", 0.0 if report.verdict == "equal" else 1.0, 0.0),
        Check("recovery", "limiting integral linear", abs(lhs - rhs) / abs(rhs), 1e-12),
    ]


SUITES = {
    "algebra": algebra_suite,
    "fields": fields_suite,
    "ray": ray_suite,
    "cgo": cgo_suite,
    "mrt": mrt_suite,
    "recovery": recovery_suite,
}


def run_all(seed: int = 0, suites=None) -> list[Check]:
    out = []
    for name in suites or SUITES:
        out.extend(SUITES[name](np.random.default_rng([seed, list(SUITES).index(name)])))
    return out
