"""Complex-direction moments on the slice ``x1 = 0`` and the injectivity verdict.

For a unit vector ``eta`` orthogonal to ``e1`` the complex vector
``w = e1 + i eta`` satisfies ``w . w = 0``, so every partially isotropic tensor
``i_delta(v)`` has ``<i_delta v, w^m> = 0``.  Moments of
``<f(0, x2, x''), w^m>`` in ``x2`` therefore vanish for such fields, and for
``m <= 1`` they vanish only for ``f = 0`` on the slice.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .ray_transform import line_nodes
from .tensor_algebra import (
    SymTensor,
    TensorRankError,
    component_position,
    isotropy_project_components,
    multi_indices,
    power_weights,
)
from .tensor_fields import GridField

DEFAULT_TOL = 1e-6


class MomentRangeError(ValueError):
    """Moment order outside ``0..m``."""


class SamplingError(ValueError):
    """Too few direction samples for a verdict."""


@dataclass(frozen=True)
class ComplexDirection:
    """Unit ``eta`` orthogonal to ``e1``; encodes the null vector ``e1 + i eta``."""

    eta: np.ndarray
    theta: float = float("nan")

    def __post_init__(self):
        eta = np.array(self.eta, dtype=float).reshape(-1)
        if abs(np.linalg.norm(eta) - 1.0) > 1e-12:
            raise ValueError(f"|eta| = {np.linalg.norm(eta)!r} is not 1")
        if abs(eta[0]) > 1e-12:
            raise ValueError(f"eta . e1 = {eta[0]!r} is not 0")
        eta.flags.writeable = False
        object.__setattr__(self, "eta", eta)

    @property
    def null_vector(self) -> np.ndarray:
        w = 1j * self.eta.astype(complex)
        w[0] += 1.0
        return w


def eta_samples(n: int = 3, count: int = 16) -> list[ComplexDirection]:
    """Equispaced ``eta(theta) = (0, cos theta, sin theta, 0, ...)``."""
    out = []
    for i in range(count):
        th = 2 * math.pi * i / count
        eta = np.zeros(n)
        eta[1], eta[2] = math.cos(th), math.sin(th)
        # exact zeros keep |eta| = 1 to the last bit
        eta[np.abs(eta) < 1e-15] = 0.0
        out.append(ComplexDirection(eta / np.linalg.norm(eta), th))
    return out


# --- slice sampling ---------------------------------------------------------------


@dataclass(frozen=True)
class SliceSamples:
    """Interpolated components on lines ``{(0, x2, x'')}`` for every transverse grid point."""

    t: np.ndarray
    weights: np.ndarray
    xpp: np.ndarray
    values: np.ndarray  # (num_xpp, num_t, ncomp)


def slice_samples(f: GridField, xpp=None, step_fraction: float = 0.5) -> SliceSamples:
    """Trapezoid nodes along ``e2`` through ``(0, 0, x'')`` and interpolated values.

    ``xpp`` defaults to every transverse grid point (axes ``2..n-1``).
    """
    if xpp is None:
        axes = [f.axis(i) for i in range(2, f.n)]
        xpp = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, f.n - 2)
    xpp = np.atleast_2d(np.asarray(xpp, dtype=float))
    e2 = np.zeros(f.n)
    e2[1] = 1.0
    base0 = np.zeros(f.n)
    nodes = line_nodes(f, base0, e2, step_fraction) if f.origin[0] <= 0 <= f.upper[0] else None
    if nodes is None:
        return SliceSamples(np.zeros(0), np.zeros(0), xpp, np.zeros((xpp.shape[0], 0, f.ncomp), complex))
    t, w = nodes
    pts = np.zeros((xpp.shape[0], t.size, f.n))
    pts[..., 1] = t[None, :]
    pts[..., 2:] = xpp[:, None, :]
    vals = f.interpolate(pts.reshape(-1, f.n)).reshape(xpp.shape[0], t.size, f.ncomp)
    return SliceSamples(t, w, xpp, vals)


def _moments(samples: SliceSamples, m: int, n: int, ks, dirs) -> np.ndarray:
    """Array ``(len(ks), len(dirs), num_xpp)`` of slice moments."""
    W = np.stack([power_weights(n, m, d.null_vector) for d in dirs], axis=1)  # (ncomp, ndir)
    contracted = samples.values @ W  # (xpp, t, dir)
    out = np.empty((len(ks), len(dirs), samples.xpp.shape[0]), dtype=complex)
    for i, k in enumerate(ks):
        out[i] = np.einsum("t,xtd->dx", samples.weights * samples.t**k, contracted)
    return out


def complex_moment(f: GridField, k: int, eta: ComplexDirection, xpp, step_fraction: float = 0.5) -> complex:
    """``int x2^k <f(0, x2, x''), (e1 + i eta)^m> dx2`` by the trapezoid rule on the slice."""
    if not 0 <= k <= f.m:
        raise MomentRangeError(f"moment order {k} outside 0..{f.m}")
    xpp = np.asarray(xpp, dtype=float).reshape(1, f.n - 2)
    s = slice_samples(f, xpp, step_fraction)
    if s.t.size == 0:
        return 0j
    return complex(_moments(s, f.m, f.n, [k], [eta])[0, 0, 0])


# --- binomial reduction ---------------------------------------------------------------


def _reduce_components(comps: np.ndarray, n: int, m: int) -> list[np.ndarray]:
    out = []
    for p in range(m + 1):
        idx = multi_indices(n - 1, p)
        arr = np.empty(comps.shape[:-1] + (len(idx),), dtype=complex)
        for c, I in enumerate(idx):
            full = tuple(i + 1 for i in I) + (0,) * (m - p)
            arr[..., c] = math.comb(m, p) * comps[..., component_position(n, full) if m else 0]
        out.append(arr)
    return out


def binomial_reduce(f):
    """``f~^p_{i1..ip} = C(m, p) f_{i1..ip 1..1}`` with ``i_j`` in ``2..n``.

    Accepts a :class:`SymTensor` (returns rank-``p`` tensors in dimension
    ``n - 1``) or a :class:`GridField` (returns component arrays with the grid
    axes leading).  Then ``sum_p i^p <f~^p, eta'^p> = <f, (e1 + i eta)^m>`` where
    ``eta'`` drops the zero first entry of ``eta``.
    """
    if isinstance(f, SymTensor):
        return [SymTensor(f.n - 1, p, a) for p, a in enumerate(_reduce_components(f.components, f.n, f.m))]
    return _reduce_components(f.data, f.n, f.m)


def reduced_eval(family, eta) -> complex:
    """``sum_p i^p <f~^p, eta'^p>`` for a family of :class:`SymTensor`."""
    eta = np.asarray(eta, dtype=float)
    return complex(sum(1j**p * (power_weights(t.n, p, eta[1:]) @ t.components) for p, t in enumerate(family)))


# --- moment tables and verdicts ------------------------------------------------------


@dataclass
class MomentTable:
    """Slice moments keyed by ``(k, eta index, x'' index, lambda)``."""

    ks: tuple
    thetas: tuple
    xpp: np.ndarray
    lambdas: tuple = (0.0,)
    values: dict = field(default_factory=dict)

    def max_abs(self) -> float:
        return max((abs(v) for v in self.values.values()), default=0.0)

    def argmax(self):
        if not self.values:
            return None
        return max(sorted(self.values), key=lambda key: abs(self.values[key]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        npp = self.xpp.shape[1]
        w.writerow(["k", "eta_theta"] + [f"xpp{i + 1}" for i in range(npp)] + ["lambda", "re", "im"])
        w.writerow(["1", "rad"] + ["length"] * npp + ["1/length", "field*length^(k+1)", "field*length^(k+1)"])
        for key in sorted(self.values):
            k, d, x, li = key
            v = self.values[key]
            w.writerow(
                [k, f"{self.thetas[d]:.12g}"]
                + [f"{c:.12g}" for c in self.xpp[x]]
                + [f"{self.lambdas[li]:.6g}", f"{v.real:.12e}", f"{v.imag:.12e}"]
            )
        return buf.getvalue()


def moment_table(f: GridField, dirs=None, step_fraction: float = 0.5) -> MomentTable:
    dirs = eta_samples(f.n) if dirs is None else list(dirs)
    s = slice_samples(f, None, step_fraction)
    ks = tuple(range(f.m + 1))
    table = MomentTable(ks, tuple(d.theta for d in dirs), s.xpp)
    if s.t.size == 0:
        for key in np.ndindex(len(ks), len(dirs), s.xpp.shape[0]):
            table.values[key + (0,)] = 0j
        return table
    arr = _moments(s, f.m, f.n, ks, dirs)
    for key in np.ndindex(arr.shape):
        table.values[key + (0,)] = complex(arr[key])
    return table


@dataclass(frozen=True)
class Verdict:
    kind: str  # "zero" | "partially_isotropic" | "nonzero"
    max_moment: float
    scale: float
    noise_floor: float
    witness: np.ndarray | None = None
    residual: float = 0.0
    offending: tuple | None = None
    table: MomentTable | None = None


def verdict_scale(f: GridField) -> float:
    """``|f|_inf`` times the largest per-axis width of the support."""
    return f.sup_norm() * float(np.max(f.support_extent(), initial=0.0))


def _rounding_floor(f: GridField) -> float:
    s = slice_samples(f)
    if s.t.size == 0:
        return 0.0
    # every entry of e1 + i eta has modulus <= 1, so sum_I mult_I |f_I| bounds the integrand
    mags = np.abs(s.values) @ power_weights(f.n, f.m, np.ones(f.n)).real
    tmax = max(float(np.max(np.abs(s.t))) ** f.m, 1.0)
    return float(np.finfo(float).eps * np.max(s.weights * mags * tmax, initial=0.0) * s.t.size)


def _distinct_directions(dirs) -> int:
    etas = np.array([d.eta for d in dirs])
    keep = []
    for e in etas:
        if all(np.linalg.norm(e - k) > 1e-9 for k in keep):
            keep.append(e)
    return len(keep)


def injectivity_verdict(f: GridField, dirs=None, tol: float = DEFAULT_TOL) -> Verdict:
    """Decide from slice moments whether ``f(0, .)`` vanishes or is partially isotropic.

    The moment threshold is ``tol * scale`` with :func:`verdict_scale`.  The
    noise floor is the larger of the biggest change of any moment when the
    quadrature step is halved and the rounding bound ``eps * sum |terms|``.
    For ``m >= 2`` with vanishing moments the witness is the pointwise isotropy
    projection ``v`` of the interpolated slice, shape
    ``(num_xpp, num_t, N_{m-2})``, and ``residual`` the largest Frobenius
    distance ``|f - i_delta v|`` over the slice.
    """
    dirs = eta_samples(f.n) if dirs is None else list(dirs)
    need = 2 * f.m + 2
    if _distinct_directions(dirs) < need:
        raise SamplingError(f"need at least {need} distinct eta samples for m = {f.m}")
    table = moment_table(f, dirs)
    fine = moment_table(f, dirs, step_fraction=0.25)
    noise = max((abs(table.values[k] - fine.values[k]) for k in table.values), default=0.0)
    noise = max(noise, _rounding_floor(f))
    scale = verdict_scale(f)
    peak = table.max_abs()
    if peak > tol * scale:
        return Verdict("nonzero", peak, scale, noise, offending=table.argmax(), table=table)
    if f.m <= 1:
        return Verdict("zero", peak, scale, noise, table=table)
    s = slice_samples(f)
    v, res = isotropy_project_components(s.values, f.n, f.m)
    if f.sup_norm() == 0:
        return Verdict("zero", peak, scale, noise, table=table)
    return Verdict("partially_isotropic", peak, scale, noise, witness=v, residual=float(res.max()), table=table)


def isotropic_slice_witness(f: GridField):
    """Pointwise isotropy projection of the slice samples (``m >= 2``)."""
    if f.m < 2:
        raise TensorRankError("witness needs rank >= 2")
    s = slice_samples(f)
    return isotropy_project_components(s.values, f.n, f.m)

