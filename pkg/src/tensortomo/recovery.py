"""Limit identities for coefficient differences and the moment-extraction induction.

A :class:`CoefficientSet` holds the differences ``W^0..W^m`` on the upper half
grid (``x_n > 0``).  :func:`limiting_terms` evaluates the four groups of the
integral identity on the reflected grid for one CGO phase bundle.  The h -> 0
stages are evaluated in closed form: with ``xi = 0`` the conjugation factors
are polynomials in ``1/h`` whose coefficients are contractions against powers
of the null vector ``rho = e1 + i eta``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .cgo import (
    Amplitude,
    PhaseBundle,
    RotatedFrame,
    TransverseBump,
    build_phases,
    exp_products,
    expand_conjugation,
    reflect_extend,
    reflect_point,
)
from .tensor_algebra import (
    TensorSizeError,
    i_delta_components,
    isotropy_project_components,
    mixed_weights,
    multi_indices,
    multiplicities,
)
from .tensor_fields import GridField, SupportError

ALGEBRAIC_TOL = 1e-10
QUADRATURE_TOL = 1e-6
DEFAULT_HS = (0.2, 0.1, 0.05, 0.025)
DEFAULT_LAMBDAS = (-1.0, -0.5, 0.0, 0.5, 1.0)
DEFAULT_G_CENTERS = (0.0, -0.6, -0.3, 0.3, 0.6, 0.9)
DEFAULT_G_RADIUS = 0.5
MAX_EXPONENT = 700.0


# --- coefficient sets -------------------------------------------------------------


@dataclass(frozen=True)
class CoefficientSet:
    """Differences ``W^j`` (rank j, j < m) and the generator ``Wbar`` of ``W^m = i_delta(Wbar)``.

    All fields share one half grid whose last axis starts at ``x_n = 0`` (or half
    a cell above it).  ``Wbar`` is ``None`` for ``m < 2`` where ``W^m = 0``.
    """

    m: int
    W: tuple
    Wbar: GridField | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        W = tuple(self.W)
        object.__setattr__(self, "W", W)
        if self.m < 1:
            raise TensorSizeError("need m >= 1")
        if len(W) != self.m:
            raise TensorSizeError(f"expected {self.m} fields W^0..W^{self.m - 1}, got {len(W)}")
        for j, f in enumerate(W):
            if f.m != j:
                raise TensorSizeError(f"W^{j} has rank {f.m}")
        if self.m >= 2:
            if self.Wbar is None or self.Wbar.m != self.m - 2:
                raise TensorSizeError(f"generator must have rank {self.m - 2}")
        elif self.Wbar is not None:
            raise TensorSizeError("no generator for m < 2")
        ref = W[0]
        if ref.n < 3:
            raise TensorSizeError("need n >= 3")
        for f in self._stored():
            if not f.same_grid(ref):
                raise TensorSizeError("coefficients live on different grids")
            if not f.has_zero_ring(2):
                raise SupportError("coefficient does not vanish on the 2-cell boundary ring")
        # validates the interface layout and margin
        for f in self._stored():
            reflect_extend(f)

    def _stored(self):
        return list(self.W) + ([self.Wbar] if self.Wbar is not None else [])

    @classmethod
    def zeros(cls, n: int, m: int, dims, origin, spacing) -> "CoefficientSet":
        W = [GridField.zeros(n, j, dims, origin, spacing) for j in range(m)]
        Wbar = GridField.zeros(n, m - 2, dims, origin, spacing) if m >= 2 else None
        return cls(m, tuple(W), Wbar)

    @property
    def n(self) -> int:
        return self.W[0].n

    @property
    def grid(self) -> GridField:
        return self.W[0]

    def field(self, j: int) -> GridField:
        """``W^j`` on the half grid, including ``W^m = i_delta(Wbar)``."""
        if j < self.m:
            return self.W[j]
        if j != self.m:
            raise TensorSizeError(f"order {j} > m = {self.m}")
        g = self.grid
        if self.Wbar is None:
            return GridField.zeros(g.n, j, g.dims, g.origin, g.spacing)
        return g.with_data(i_delta_components(self.Wbar.data, g.n, self.m - 2), m=j)

    def extended(self, j: int) -> GridField:
        """``W^j`` reflected onto the doubled grid O (cached)."""
        key = ("ext", j)
        if key not in self._cache:
            self._cache[key] = reflect_extend(self.field(j))
        return self._cache[key]

    def replace(self, j: int, f: GridField) -> "CoefficientSet":
        W = list(self.W)
        Wbar = self.Wbar
        if j == "bar":
            Wbar = f
        else:
            W[j] = f
        return CoefficientSet(self.m, tuple(W), Wbar)

    def scaled(self, alpha) -> "CoefficientSet":
        W = tuple(f * alpha for f in self.W)
        return CoefficientSet(self.m, W, None if self.Wbar is None else self.Wbar * alpha)

    def __add__(self, other: "CoefficientSet") -> "CoefficientSet":
        if self.m != other.m:
            raise TensorSizeError("orders differ")
        W = tuple(a + b for a, b in zip(self.W, other.W))
        Wbar = None if self.Wbar is None else self.Wbar + other.Wbar
        return CoefficientSet(self.m, W, Wbar)

    def is_zero(self) -> bool:
        return all(not np.any(f.data) for f in self._stored())

    def sup_norm(self) -> float:
        return max(f.sup_norm() for f in self._stored())


# --- the four-group identity ------------------------------------------------------


@dataclass(frozen=True)
class LimitingTerms:
    """The four groups of the identity, each already scaled by ``h^s``.

    ``main`` and ``starred`` carry ``e^{i x.xi}`` on the upper and reflected halves;
    ``cross_plus`` and ``cross_minus`` are the mixed products with frequencies
    ``xi_+`` and ``xi_-``.
    """

    main: complex
    cross_plus: complex
    cross_minus: complex
    starred: complex

    @property
    def total(self) -> complex:
        return self.main + self.cross_plus + self.cross_minus + self.starred

    @property
    def oscillatory(self) -> complex:
        """Main plus starred group: the part that survives ``h -> 0``."""
        return self.main + self.starred

    def as_dict(self) -> dict:
        return {
            "main": self.main,
            "cross_plus": self.cross_plus,
            "cross_minus": self.cross_minus,
            "starred": self.starred,
        }


def _derivative_cache(a0: Amplitude, pts: np.ndarray):
    const = a0.constant_value()
    cache: dict = {}

    def deriv(axes):
        if const is not None:
            return const if not axes else 0.0
        if axes not in cache:
            cache[axes] = a0.derivative_x(pts, axes)
        return cache[axes]

    return deriv


def _support_points(Wset: CoefficientSet):
    grid = Wset.extended(0)
    mask = np.zeros(grid.dims, dtype=bool)
    for j in range(Wset.m + 1):
        mask |= np.any(Wset.extended(j).data != 0, axis=-1)
    return grid, mask


def limiting_terms(Wset: CoefficientSet, bundle: PhaseBundle, a0: Amplitude, b0bar: Amplitude, s: int = 0) -> LimitingTerms:
    """Quadrature over O of the four groups with exact conjugation factors.

    On O the reflected coefficients make ``main`` and ``starred`` one integral
    ``int C(x) conj(b0)(x) e^{i x.xi}`` split by the sign of ``x_n``, and the
    two cross groups ``-int C(x) conj(b0)(x*) e^{(x.zeta1 + x*.conj(zeta2))/h}``,
    where ``C = sum_j sum_I W^j_I (I^j_I a0)``.
    """
    if bundle.n != Wset.n:
        raise TensorSizeError("bundle and coefficients differ in dimension")
    grid, mask = _support_points(Wset)
    if not mask.any():
        return LimitingTerms(0j, 0j, 0j, 0j)
    pts = grid.points()[mask.ravel()]
    deriv = _derivative_cache(a0, pts)
    C = np.zeros(pts.shape[0], dtype=complex)
    for j in range(Wset.m + 1):
        F = Wset.extended(j).data[mask]
        if not F.any():
            continue
        mult = multiplicities(Wset.n, j)
        for c, idx in enumerate(multi_indices(Wset.n, j)):
            if not F[:, c].any():
                continue
            C += mult[c] * F[:, c] * expand_conjugation(bundle, idx, deriv)
    logs = exp_products(bundle, pts).closed
    if np.max(logs[:2].real) > MAX_EXPONENT:
        raise OverflowError("cross-term exponential exceeds the floating-point range; increase h")
    bx = b0bar(pts)
    bxs = b0bar(reflect_point(pts))
    dV = grid.cell_volume * bundle.h**s
    upper = pts[:, -1] > 0
    lower = pts[:, -1] < 0
    osc = C * bx * np.exp(logs[0])
    cross = -C * bxs * np.exp(logs[1])
    return LimitingTerms(
        main=complex(np.sum(osc[upper]) * dV),
        cross_plus=complex(np.sum(cross[upper]) * dV),
        cross_minus=complex(np.sum(cross[lower]) * dV),
        starred=complex(np.sum(osc[lower]) * dV),
    )


def limiting_integral(Wset: CoefficientSet, bundle: PhaseBundle, a0: Amplitude, b0bar: Amplitude, s: int = 0) -> complex:
    """Sum of the four groups of :func:`limiting_terms`."""
    return limiting_terms(Wset, bundle, a0, b0bar, s).total


# --- Riemann-Lebesgue sweep -------------------------------------------------------


@dataclass(frozen=True)
class DecayTable:
    hs: tuple
    cross_plus: np.ndarray
    cross_minus: np.ndarray
    oscillatory: np.ndarray

    def ratios(self, which: str = "cross_plus") -> np.ndarray:
        v = getattr(self, which)
        return v[1:] / v[:-1]

    def passes(self, threshold: float = 0.7) -> bool:
        return all(np.all(self.ratios(w) <= threshold) for w in ("cross_plus", "cross_minus"))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["h", "abs_cross_plus", "abs_cross_minus", "abs_main_plus_starred", "log2_h", "log10_cross_plus", "log10_cross_minus"])
        w.writerow(["1", "field*volume", "field*volume", "field*volume", "1", "1", "1"])
        for i, h in enumerate(self.hs):
            cp, cm = self.cross_plus[i], self.cross_minus[i]
            w.writerow(
                [
                    f"{h:.6g}",
                    f"{cp:.10e}",
                    f"{cm:.10e}",
                    f"{self.oscillatory[i]:.10e}",
                    f"{math.log2(h):.6f}",
                    f"{math.log10(cp) if cp > 0 else float('-inf'):.6f}",
                    f"{math.log10(cm) if cm > 0 else float('-inf'):.6f}",
                ]
            )
        return buf.getvalue()


def decay_sweep(Wset: CoefficientSet, mu1, mu2, xi, hs=DEFAULT_HS, s: int | None = None) -> DecayTable:
    """Cross-term magnitudes for unit amplitudes over a sequence of ``h``.

    ``s`` defaults to ``m - 1``, the power that keeps the leading order finite.
    """
    s = Wset.m - 1 if s is None else s
    cp, cm, osc = [], [], []
    for h in hs:
        bundle = build_phases(mu1, mu2, xi, h)
        one = Amplitude(bundle.frame())
        t = limiting_terms(Wset, bundle, one, one, s)
        cp.append(abs(t.cross_plus))
        cm.append(abs(t.cross_minus))
        osc.append(abs(t.oscillatory))
    return DecayTable(tuple(hs), np.array(cp), np.array(cm), np.array(osc))


# --- h -> 0 stages ------------------------------------------------------------------


def eta_frame(theta: float, n: int = 3) -> RotatedFrame:
    """Frame with ``u1 = e1`` and ``eta = (0, cos theta, sin theta, 0, ...)``."""
    u1 = np.zeros(n)
    u1[0] = 1.0
    eta = np.zeros(n)
    eta[1], eta[2] = math.cos(theta), math.sin(theta)
    return RotatedFrame.from_directions(u1, eta)


def default_thetas(count: int = 16) -> np.ndarray:
    return 2 * np.pi * np.arange(count) / count


def stage_bundle(frame: RotatedFrame, h: float) -> PhaseBundle:
    """Bundle with ``xi = 0`` whose zeta1 equals the frame's null vector."""
    return build_phases(frame.basis[1], frame.basis[0], np.zeros(frame.n), h)


def _a0_y2_derivative(l: int, q: int, y2: np.ndarray) -> np.ndarray:
    # d^q/dy2^q (2i y2)^l
    if q > l:
        return np.zeros_like(y2, dtype=complex)
    return (2j) ** l * math.perm(l, q) * y2 ** (l - q)


def stage_integrand(Wset: CoefficientSet, frame: RotatedFrame, p: int, l: int) -> np.ndarray:
    """Coefficient of ``h^-p`` in ``sum_j <W^j, I^j a0>`` for ``a0 = (z - zbar)^l``, on O.

    Equal to ``sum_{j - q = p} C(j, q) (-i)^j <W^j, rho^p . grad^q a0>``; since
    ``a0`` depends on ``y2`` only, ``grad^q a0 = a0^(q)(y2) eta^q``.
    """
    grid = Wset.extended(0)
    y2 = np.tensordot(np.stack(grid.mesh(), axis=-1), frame.basis[1], axes=([-1], [0]))
    rho = frame.rho
    eta = frame.basis[1]
    out = np.zeros(grid.dims, dtype=complex)
    for j in range(p, Wset.m + 1):
        q = j - p
        if q > l:
            break
        F = Wset.extended(j).data
        if not F.any():
            continue
        w = mixed_weights(Wset.n, [rho] * p + [eta] * q)
        out += math.comb(j, q) * (-1j) ** j * (F @ w) * _a0_y2_derivative(l, q, y2)
    return out


def stage_bound_density(Wset: CoefficientSet, frame: RotatedFrame, p: int, l: int) -> np.ndarray:
    """Pointwise upper bound of ``|stage_integrand|`` by Cauchy-Schwarz."""
    grid = Wset.extended(0)
    y2 = np.tensordot(np.stack(grid.mesh(), axis=-1), frame.basis[1], axes=([-1], [0]))
    out = np.zeros(grid.dims)
    rho_norm = math.sqrt(2.0)
    for j in range(p, Wset.m + 1):
        q = j - p
        if q > l:
            break
        F = Wset.extended(j).data
        if not F.any():
            continue
        fro = np.sqrt(np.abs(F) ** 2 @ multiplicities(Wset.n, j))
        out += math.comb(j, q) * fro * rho_norm**p * np.abs(_a0_y2_derivative(l, q, y2))
    return out


@dataclass
class MomentFamily:
    """``M(lam) = int_O S(x) (z - zbar)^k e^{-i lam z} g(y'') dx`` for one stage integrand.

    The ``x1`` (= ``y1``) integral is a partial Fourier sum evaluated at ``lam``;
    the rest is a 2-D quadrature over ``(x2, x3)``.
    """

    S: np.ndarray
    grid: GridField
    frame: RotatedFrame
    k: int
    g: TransverseBump | None = None
    bound: np.ndarray | None = None
    cache: dict = field(default_factory=dict, repr=False)

    def _plane(self):
        if "plane" not in self.cache:
            ax = [self.grid.axis(i) for i in range(1, self.grid.n)]
            rest = np.stack(np.meshgrid(*ax, indexing="ij"), axis=-1)
            B = self.frame.basis[:, 1:]
            self.cache["plane"] = (rest @ B[1], rest @ B[2:].T)
        return self.cache["plane"]

    def _weight(self, lam: float, y2, ypp) -> np.ndarray:
        out = (2j * y2) ** self.k * np.exp(lam * y2)
        if self.g is not None:
            out = out * self.g(ypp)
        return out

    def _partial_fourier(self, c: int, lam: float) -> np.ndarray:
        # sum over x1 of S (-i x1)^c e^{-i lam x1}
        key = ("fourier", c, lam)
        if key not in self.cache:
            x1 = self.grid.axis(0)
            self.cache[key] = np.tensordot((-1j * x1) ** c * np.exp(-1j * lam * x1), self.S, axes=([0], [0]))
        return self.cache[key]

    def derivative(self, r: int = 0, lam: float = 0.0) -> complex:
        """``d^r/dlam^r M`` by inserting ``(-i z)^r = (y2 - i y1)^r`` under the integral."""
        y2, ypp = self._plane()
        wgt = self._weight(lam, y2, ypp)
        total = 0j
        for c in range(r + 1):
            total += math.comb(r, c) * np.sum(self._partial_fourier(c, lam) * y2 ** (r - c) * wgt)
        return complex(total * self.grid.cell_volume)

    def value(self, lam: float) -> complex:
        return self.derivative(0, lam)

    def scale(self, r: int = 0, lam: float = 0.0) -> float:
        """Integral of the pointwise bound times ``|conj(b0)| |z|^r``."""
        if self.bound is None:
            return float("nan")
        y2, ypp = self._plane()
        key = ("bound", r)
        if key not in self.cache:
            x1 = self.grid.axis(0)
            zabs = (x1[:, None, None] ** 2 + y2[None] ** 2) ** (r / 2)
            self.cache[key] = np.sum(self.bound * zabs, axis=0)
        wgt = np.abs(self._weight(lam, y2, ypp))
        return float(np.sum(self.cache[key] * wgt) * self.grid.cell_volume)


def moment_family(Wset: CoefficientSet, theta: float, p: int, l: int, k: int, g=None) -> MomentFamily:
    frame = eta_frame(theta, Wset.n)
    S = stage_integrand(Wset, frame, p, l)
    bound = stage_bound_density(Wset, frame, p, l)
    return MomentFamily(S, Wset.extended(0), frame, k, g, bound)


def lambda_derivative(family: MomentFamily, r: int, lam: float = 0.0) -> complex:
    """``d^r/dlam^r`` of a moment family, analytically (no differencing)."""
    if r < 0:
        raise ValueError("derivative order must be >= 0")
    return family.derivative(r, lam)


def stage_moment(Wset: CoefficientSet, theta: float, p: int, l: int, k: int, lam: float, g=None) -> complex:
    return moment_family(Wset, theta, p, l, k, g).value(lam)


def step1_extract(Wset: CoefficientSet, theta: float, k: int, lam: float, g=None) -> complex:
    """Leading-order moment with ``a0 = 1``: ``int <W^{m-1}, rho^{m-1}> (z - zbar)^k e^{-i lam z} g``.

    Includes the factor ``(-i)^{m-1}`` carried by the conjugation factors.
    """
    if not 0 <= k <= Wset.m - 1:
        raise ValueError(f"k = {k} outside 0..{Wset.m - 1}")
    return stage_moment(Wset, theta, Wset.m - 1, 0, k, lam, g)


# --- induction --------------------------------------------------------------------


@dataclass(frozen=True)
class StageRecord:
    j: int
    r: int
    l: int
    p: int
    max_ratio: float
    max_moment: float
    scale: float
    passed: bool
    isotropy_residual: float
    witness_norm: float
    offending: tuple | None = None


@dataclass
class RecoveryReport:
    m: int
    n: int
    stages: list
    verdict: str
    tol: float
    decay: DecayTable | None = None

    @property
    def failure(self) -> StageRecord | None:
        return next((s for s in self.stages if not s.passed), None)

    def stage_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["j", "r", "l", "p", "max_ratio", "max_abs_moment", "scale", "passed", "isotropy_residual", "witness_norm", "k", "eta_theta", "lambda", "g_index", "lambda_order"])
        w.writerow(["1", "1", "1", "1", "1", "field*volume", "field*volume", "bool", "field", "field", "1", "rad", "1/length", "1", "1"])
        for s in self.stages:
            off = s.offending or ("", "", "", "", "")
            w.writerow(
                [s.j, s.r, s.l, s.p, f"{s.max_ratio:.6e}", f"{s.max_moment:.6e}", f"{s.scale:.6e}", int(s.passed), f"{s.isotropy_residual:.6e}", f"{s.witness_norm:.6e}"]
                + [f"{v:.6g}" if isinstance(v, float) else v for v in off]
            )
        return buf.getvalue()

    def summary(self) -> str:
        lines = [f"recovery m={self.m} n={self.n} tol={self.tol:.1e}", f"verdict: {self.verdict}"]
        for s in self.stages:
            flag = "pass" if s.passed else "FAIL"
            lines.append(f"  stage j={s.j} r={s.r} l={s.l}: {flag} max|M|/scale={s.max_ratio:.3e} iso_residual={s.isotropy_residual:.3e}")
        fail = self.failure
        if fail is not None:
            k, theta, lam, gi, rr = fail.offending
            lines.append(f"first failure: (j={fail.j}, l={fail.l}, k={k}, eta_theta={theta:.6f}) lambda={lam} g={gi} d^{rr}/dlam^{rr}")
        if self.decay is not None:
            lines.append("decay ratios cross_plus: " + " ".join(f"{v:.3f}" for v in self.decay.ratios("cross_plus")))
            lines.append("decay ratios cross_minus: " + " ".join(f"{v:.3f}" for v in self.decay.ratios("cross_minus")))
        return "\n".join(lines) + "\n"


def _witness(Wset: CoefficientSet, order: int):
    """Pointwise isotropy projection of ``W^order`` (or its rank if < 2)."""
    if order == Wset.m:
        v = Wset.Wbar
        return 0.0, (v.sup_norm() if v is not None else 0.0)
    F = Wset.field(order)
    if order < 2:
        return F.sup_norm(), F.sup_norm()
    v, res = isotropy_project_components(F.data, F.n, order)
    return float(res.max()), float(np.abs(v).max())


def stage_list(m: int):
    """``(p, l)`` pairs in induction order; ``a0 = (z - zbar)^l`` needs ``l <= m - 1``."""
    out = []
    for p in range(m - 1, -1, -1):
        for l in range(0, min(m - p, m - 1) + 1):
            out.append((p, l))
    return out


def induction_driver(
    Wset: CoefficientSet,
    tol: float = ALGEBRAIC_TOL,
    thetas=None,
    lambdas=DEFAULT_LAMBDAS,
    g_centers=DEFAULT_G_CENTERS,
    g_radius: float = DEFAULT_G_RADIUS,
    stop_on_failure: bool = True,
    decay: DecayTable | None = None,
) -> RecoveryReport:
    """Run the stages from order ``m - 1`` downwards and decide equality.

    Stage ``(p, l)`` uses ``a0 = (z - zbar)^l`` and the ``h^-p`` coefficient; it
    is labelled ``j = m - 1 - p`` (descent step) and ``r = m - p - l`` (the
    highest order ``W^{m-r}`` it involves).  It passes when every moment, over
    ``k < m``, the eta sweep, the ``lambda`` samples, the ``g`` sweep and the
    ``lambda``-derivatives of order ``<= m`` at 0, is at most ``tol`` times its
    Cauchy-Schwarz bound.
    """
    thetas = default_thetas() if thetas is None else np.asarray(thetas, dtype=float)
    m = Wset.m
    gs = [TransverseBump((c,) * (Wset.n - 2), g_radius) for c in g_centers]
    records = []
    for p, l in stage_list(m):
        best = (0.0, 0.0, 0.0, None)
        for theta in thetas:
            frame = eta_frame(float(theta), Wset.n)
            S = stage_integrand(Wset, frame, p, l)
            bound = stage_bound_density(Wset, frame, p, l)
            shared: dict = {}
            for k in range(m):
                for gi, g in enumerate(gs):
                    fam = MomentFamily(S, Wset.extended(0), frame, k, g, bound, shared)
                    probes = [(lam, 0) for lam in lambdas] + [(0.0, r) for r in range(1, m + 1)]
                    for lam, r in probes:
                        val = abs(fam.derivative(r, lam))
                        sc = fam.scale(r, lam)
                        ratio = val / sc if sc > 0 else (0.0 if val == 0 else math.inf)
                        if ratio > best[0] or best[3] is None:
                            best = (ratio, val, sc, (k, float(theta), float(lam), gi, r))
        ratio, val, sc, where = best
        passed = ratio <= tol
        res, wn = _witness(Wset, min(p + l, m))
        records.append(
            StageRecord(
                j=m - 1 - p,
                r=m - p - l,
                l=l,
                p=p,
                max_ratio=ratio,
                max_moment=val,
                scale=sc,
                passed=passed,
                isotropy_residual=res,
                witness_norm=wn,
                offending=None if passed else where,
            )
        )
        if not passed and stop_on_failure:
            break
    verdict = "equal" if all(r.passed for r in records) else "different"
    return RecoveryReport(m, Wset.n, records, verdict, tol, decay)
