"""Complex geometric optics machinery: linear phases, zeta vectors, transport
operator, closed-form amplitudes, conjugation factors and reflection across
the hyperplane ``{x_n = 0}``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .tensor_algebra import multi_indices
from .tensor_fields import GridField, ResolutionError, SupportError, central_diff, mollifier_derivative

TOL = 1e-12
# frame-mode T applied to (z - zbar); see README "Conventions"
TRANSPORT_CONSTANT = -4.0


class PhaseError(ValueError):
    """A phase-bundle constraint is violated; ``constraint`` names it."""

    def __init__(self, constraint: str, detail: str = ""):
        self.constraint = constraint
        super().__init__(f"constraint {constraint!r} violated{': ' + detail if detail else ''}")


@dataclass(frozen=True)
class PhaseBundle:
    """Linear phases ``phi = mu2.x`` and ``psi = (h xi/2 + root mu1).x``."""

    h: float
    xi: np.ndarray
    mu1: np.ndarray
    mu2: np.ndarray

    @property
    def n(self) -> int:
        return self.xi.size

    @property
    def root(self) -> float:
        return math.sqrt(1.0 - self.h**2 * float(self.xi @ self.xi) / 4.0)

    @property
    def phi_grad(self) -> np.ndarray:
        return self.mu2

    @property
    def psi_grad(self) -> np.ndarray:
        return self.h * self.xi / 2 + self.root * self.mu1

    @property
    def zeta1(self) -> np.ndarray:
        return 1j * self.h * self.xi / 2 + 1j * self.root * self.mu1 + self.mu2

    @property
    def zeta2(self) -> np.ndarray:
        return -1j * self.h * self.xi / 2 + 1j * self.root * self.mu1 - self.mu2

    @property
    def xi_plus(self) -> np.ndarray:
        out = self.xi.astype(float).copy()
        out[-1] = 2.0 / self.h * self.root * self.mu1[-1]
        return out

    @property
    def xi_minus(self) -> np.ndarray:
        out = self.xi_plus
        out[-1] = -out[-1]
        return out

    @property
    def reflection_ready(self) -> bool:
        """``mu2_n = 0`` and ``mu1_n != 0``: the cross terms are pure oscillations."""
        return abs(self.mu2[-1]) <= TOL and abs(self.mu1[-1]) > TOL

    def phi(self, x) -> np.ndarray:
        return np.asarray(x) @ self.phi_grad

    def psi(self, x) -> np.ndarray:
        return np.asarray(x) @ self.psi_grad

    def frame(self) -> "RotatedFrame":
        """The h -> 0 frame with ``e1 -> mu2`` and ``eta -> mu1``."""
        return RotatedFrame.from_directions(self.mu2, self.mu1)


def build_phases(mu1, mu2, xi, h: float) -> PhaseBundle:
    mu1, mu2, xi = (np.array(v, dtype=float).reshape(-1) for v in (mu1, mu2, xi))
    if not (mu1.size == mu2.size == xi.size):
        raise PhaseError("dimension", "mu1, mu2, xi differ in length")
    if mu1.size < 3:
        raise PhaseError("n >= 3", f"n = {mu1.size}")
    if not h > 0:
        raise PhaseError("h > 0", f"h = {h}")
    checks = [
        ("|mu1| = 1", abs(np.linalg.norm(mu1) - 1)),
        ("|mu2| = 1", abs(np.linalg.norm(mu2) - 1)),
        ("mu1.mu2 = 0", abs(mu1 @ mu2)),
        ("xi.mu1 = 0", abs(xi @ mu1)),
        ("xi.mu2 = 0", abs(xi @ mu2)),
    ]
    for name, err in checks:
        if err > TOL * max(1.0, np.linalg.norm(xi)):
            raise PhaseError(name, f"error {err:.3e}")
    if not 1.0 - h**2 * (xi @ xi) / 4.0 > 0:
        raise PhaseError("h|xi| < 2", f"h|xi| = {h * np.linalg.norm(xi):.6g}")
    return PhaseBundle(float(h), xi, mu1, mu2)


# --- exponential products -------------------------------------------------------

PRODUCT_NAMES = ("main", "cross_plus", "cross_minus", "starred")


def reflect_point(x) -> np.ndarray:
    """``x* = (x', -x_n)``; works on arrays of points (last axis = coordinates)."""
    out = np.array(x, dtype=float, copy=True)
    out[..., -1] *= -1
    return out


@dataclass(frozen=True)
class ProductIdentities:
    """Logarithms of the four exponential products, computed two ways.

    ``direct[i]`` sums the exponents of the two zeta exponentials;
    ``closed[i]`` uses the right-hand closed forms in ``xi``, ``xi_+``, ``xi_-``.
    Arrays have shape ``(4,) + points.shape[:-1]`` in :data:`PRODUCT_NAMES` order.
    """

    direct: np.ndarray
    closed: np.ndarray

    def values(self, which: str = "closed") -> np.ndarray:
        return np.exp(getattr(self, which))

    def relative_mismatch(self) -> np.ndarray:
        return np.abs(np.expm1(self.direct - self.closed))


def exp_products(bundle: PhaseBundle, x) -> ProductIdentities:
    """Four products ``e^{a.zeta1/h} e^{b.conj(zeta2)/h}`` for ``a, b in {x, x*}``.

    Returned in log space so growing exponentials (``mu2_n != 0``) cannot overflow.
    """
    x = np.asarray(x, dtype=float)
    xs = reflect_point(x)
    h = bundle.h
    z1, z2c = bundle.zeta1, np.conj(bundle.zeta2)
    direct = np.stack(
        [
            x @ z1 / h + x @ z2c / h,
            x @ z1 / h + xs @ z2c / h,
            xs @ z1 / h + x @ z2c / h,
            xs @ z1 / h + xs @ z2c / h,
        ]
    )
    two_mu2n = 2.0 * bundle.mu2[-1] * x[..., -1] / h
    closed = np.stack(
        [
            1j * (x @ bundle.xi),
            1j * (x @ bundle.xi_plus) + two_mu2n,
            1j * (x @ bundle.xi_minus) - two_mu2n,
            1j * (xs @ bundle.xi),
        ]
    )
    return ProductIdentities(direct, closed)


def exp_products_direct_values(bundle: PhaseBundle, x) -> np.ndarray:
    """The four products as plain products of separately evaluated exponentials."""
    x = np.asarray(x, dtype=float)
    xs = reflect_point(x)
    h = bundle.h
    e1x, e1s = np.exp(x @ bundle.zeta1 / h), np.exp(xs @ bundle.zeta1 / h)
    e2x, e2s = np.exp(x @ np.conj(bundle.zeta2) / h), np.exp(xs @ np.conj(bundle.zeta2) / h)
    return np.stack([e1x * e2x, e1x * e2s, e1s * e2x, e1s * e2s])


# --- rotated frame and amplitudes ------------------------------------------------


@dataclass(frozen=True)
class RotatedFrame:
    """Orthonormal basis ``(u1, eta, rest...)``; ``y = basis @ x``, ``z = y1 + i y2``."""

    basis: np.ndarray

    def __post_init__(self):
        b = np.array(self.basis, dtype=float)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise ValueError("basis must be square")
        if np.abs(b @ b.T - np.eye(b.shape[0])).max() > 1e-12:
            raise ValueError("basis is not orthonormal")
        b.flags.writeable = False
        object.__setattr__(self, "basis", b)

    @classmethod
    def from_directions(cls, u1, eta) -> "RotatedFrame":
        u1 = np.asarray(u1, dtype=float)
        eta = np.asarray(eta, dtype=float)
        n = u1.size
        vecs = [u1, eta]
        # complete with Gram-Schmidt on the standard basis
        for e in np.eye(n):
            if len(vecs) == n:
                break
            w = e - sum((e @ v) * v for v in vecs)
            if np.linalg.norm(w) > 1e-8:
                vecs.append(w / np.linalg.norm(w))
        if n == 3:
            vecs[2] = np.cross(u1, eta)
        return cls(np.array(vecs))

    @property
    def n(self) -> int:
        return self.basis.shape[0]

    @property
    def rho(self) -> np.ndarray:
        """Null vector ``u1 + i eta``."""
        return self.basis[0] + 1j * self.basis[1]

    def coords(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.basis.T

    def z(self, x) -> np.ndarray:
        y = self.coords(x)
        return y[..., 0] + 1j * y[..., 1]


@dataclass(frozen=True)
class TransverseBump:
    """Separable bump ``g(y'') = prod b((y''_i - c_i)/r_i)`` in the transverse coordinates."""

    center: tuple
    radius: float

    def derivative(self, ypp: np.ndarray, orders) -> np.ndarray:
        out = np.ones(ypp.shape[:-1])
        for i, order in enumerate(orders):
            s = (ypp[..., i] - self.center[i]) / self.radius
            out = out * mollifier_derivative(s, order) / self.radius**order
        return out

    def __call__(self, ypp) -> np.ndarray:
        ypp = np.asarray(ypp, dtype=float)
        return self.derivative(ypp, (0,) * ypp.shape[-1])


@dataclass(frozen=True)
class Amplitude:
    """``a(y) = sum_l c_l (z - zbar)^l * exp(-i lam z) * g(y'')`` in a rotated frame.

    ``coeffs`` maps powers ``l`` to coefficients; ``g=None`` means ``g = 1``.
    """

    frame: RotatedFrame
    coeffs: dict = field(default_factory=lambda: {0: 1.0})
    lam: float = 0.0
    g: TransverseBump | None = None

    @property
    def degree(self) -> int:
        nz = [l for l, c in self.coeffs.items() if c != 0]
        return max(nz) if nz else -1

    def is_zero(self) -> bool:
        return self.degree < 0

    def dzbar(self) -> "Amplitude":
        """Closed-form ``d/dzbar``: ``(z - zbar)^l -> -l (z - zbar)^(l-1)``."""
        out = {}
        for l, c in self.coeffs.items():
            if l > 0 and c != 0:
                out[l - 1] = out.get(l - 1, 0) - l * c
        return Amplitude(self.frame, out, self.lam, self.g)

    def scaled(self, alpha) -> "Amplitude":
        return Amplitude(self.frame, {l: alpha * c for l, c in self.coeffs.items()}, self.lam, self.g)

    def constant_value(self):
        """The constant if the amplitude is ``c * 1`` with no holomorphic/transverse factor."""
        if self.degree > 0 or self.lam != 0 or self.g is not None:
            return None
        return complex(self.coeffs.get(0, 0))

    def partial_y(self, x, orders) -> np.ndarray:
        """Exact mixed derivative ``d^orders / dy`` at points ``x``."""
        y = self.frame.coords(x)
        a, b = orders[0], orders[1]
        lam = self.lam
        y1, y2 = y[..., 0], y[..., 1]
        # (z - zbar)^l e^{-i lam z} = (2i)^l y2^l e^{-i lam y1} e^{lam y2}
        out = np.zeros(y.shape[:-1], dtype=complex)
        for l, c in self.coeffs.items():
            if c == 0:
                continue
            acc = np.zeros_like(out)
            for cc in range(min(b, l) + 1):
                acc = acc + math.comb(b, cc) * math.perm(l, cc) * y2 ** (l - cc) * lam ** (b - cc)
            out = out + c * (2j) ** l * acc
        out = out * (-1j * lam) ** a * np.exp(-1j * lam * y1 + lam * y2)
        rest = tuple(orders[2:])
        if self.g is not None:
            out = out * self.g.derivative(y[..., 2:], rest)
        elif any(rest):
            out = np.zeros_like(out)
        return out

    def __call__(self, x) -> np.ndarray:
        return self.partial_y(x, (0,) * self.frame.n)

    def derivative_x(self, x, axes) -> np.ndarray:
        """Exact ``d/dx_{axes[0]} ... d/dx_{axes[-1]}`` via the chain rule ``d/dx_i = sum_r B_ri d/dy_r``."""
        n = self.frame.n
        B = self.frame.basis
        out = 0
        for seq in itertools.product(range(n), repeat=len(axes)):
            coef = np.prod([B[r, i] for r, i in zip(seq, axes)]) if axes else 1.0
            if coef == 0:
                continue
            orders = [0] * n
            for r in seq:
                orders[r] += 1
            out = out + coef * self.partial_y(x, orders)
        if not axes:
            return self.partial_y(x, (0,) * n)
        return out


def amplitude_family(l: int, k: int, lam: float, g: TransverseBump | None, frame: RotatedFrame, m: int):
    """``a0 = (z - zbar)^l`` and ``conj(b0) = (z - zbar)^k exp(-i lam z) g(y'')``."""
    for name, v in (("l", l), ("k", k)):
        if not 0 <= v <= m:
            raise ValueError(f"{name} = {v} outside 0..{m}")
    a0 = Amplitude(frame, {l: 1.0})
    b0bar = Amplitude(frame, {k: 1.0}, lam, g)
    return a0, b0bar


def dzbar_grid(arr: np.ndarray, spacing, axes=(0, 1)) -> np.ndarray:
    """``(D_{y1} + i D_{y2}) / 2`` by central differences on a frame-aligned grid."""
    return 0.5 * (central_diff(arr, axes[0], spacing[axes[0]]) + 1j * central_diff(arr, axes[1], spacing[axes[1]]))


# --- transport operator -------------------------------------------------------


def transport_vector(op) -> np.ndarray:
    """``2 grad(phi + i psi)`` for a bundle, ``2 (u1 + i eta)`` for a frame."""
    if isinstance(op, PhaseBundle):
        return 2.0 * op.zeta1
    if isinstance(op, RotatedFrame):
        return 2.0 * op.rho
    raise TypeError(f"expected PhaseBundle or RotatedFrame, got {type(op).__name__}")


def transport_apply(op, target, points=None):
    """Apply ``T = 2 grad(phi + i psi) . grad`` (affine phases, so no Laplacian term).

    * frame + :class:`Amplitude` -> closed-form Amplitude (``T = 4 d/dzbar``);
    * bundle or frame + Amplitude + ``points`` -> exact values at the points;
    * bundle or frame + rank-0 :class:`GridField` -> central-difference field.
    """
    vec = transport_vector(op)
    if isinstance(target, Amplitude):
        if points is None:
            if not isinstance(op, RotatedFrame) or not np.allclose(op.basis, target.frame.basis):
                raise ValueError("closed-form transport needs the amplitude's own frame")
            return target.dzbar().scaled(4.0)
        return sum(vec[i] * target.derivative_x(points, (i,)) for i in range(vec.size))
    if isinstance(target, GridField):
        if target.m != 0:
            raise ValueError("transport acts on scalar fields")
        if min(target.dims) < 3:
            raise ResolutionError("grid too small for central differences")
        arr = target.data[..., 0]
        out = sum(vec[i] * central_diff(arr, i, target.spacing[i]) for i in range(target.n))
        return target.with_data(out[..., None])
    raise TypeError(f"cannot apply T to {type(target).__name__}")


def conjugation_factor(bundle: PhaseBundle, j: int, index, amp, points=None) -> np.ndarray:
    """``prod_k ((1/h) D_{i_k}(phi + i psi) + D_{i_k})`` applied to ``amp``.

    ``D = -i d/dx``, so ``(1/h) D(phi + i psi) = -i zeta1 / h``.  The product is
    expanded over subsets ``S`` of the factor positions that differentiate.
    ``amp`` is an :class:`Amplitude` (exact, evaluated at ``points``) or a
    rank-0 :class:`GridField` (central differences, returns a GridField).
    """
    index = tuple(int(i) for i in index)
    if len(index) != j:
        raise ValueError(f"multi-index {index} does not have length j = {j}")
    if isinstance(amp, GridField):
        if amp.m != 0:
            raise ValueError("conjugation factor acts on scalar amplitudes")
        if j and min(amp.dims) < 2 * j + 1:
            raise ResolutionError(f"grid {amp.dims} too small for {j} central differences")

        def deriv(axes):
            arr = amp.data[..., 0]
            for ax in axes:
                arr = central_diff(arr, ax, amp.spacing[ax])
            return arr

        out = expand_conjugation(bundle, index, deriv)
        return amp.with_data(np.broadcast_to(out, amp.dims)[..., None])
    out = expand_conjugation(bundle, index, lambda axes: amp.derivative_x(points, axes))
    return np.broadcast_to(out, np.shape(points)[:-1]).astype(complex)


def expand_conjugation(bundle: PhaseBundle, index, deriv):
    """Sum over subsets ``S`` of positions: ``prod_{k not in S} (-i zeta1_{i_k}/h) (-i)^|S| d_{I_S} a``.

    ``deriv(axes)`` returns the derivative of the amplitude along sorted ``axes``.
    """
    j = len(index)
    z1 = bundle.zeta1
    out = 0
    for size in range(j + 1):
        for S in itertools.combinations(range(j), size):
            lead = 1.0
            for k in range(j):
                if k not in S:
                    lead = lead * (-1j * z1[index[k]] / bundle.h)
            out = out + lead * (-1j) ** size * deriv(tuple(sorted(index[k] for k in S)))
    return out


# --- reflection -----------------------------------------------------------------

INTERFACE_MARGIN = 2


def _normal_counts(n: int, m: int) -> np.ndarray:
    return np.array([idx.count(n - 1) for idx in multi_indices(n, m)], dtype=int)


def reflection_signs(n: int, m: int) -> np.ndarray:
    """``(-1)^p`` per canonical component, ``p`` = number of indices equal to n."""
    return (-1.0) ** _normal_counts(n, m)


def _interface_layout(field_: GridField):
    h = field_.spacing[-1]
    o = field_.origin[-1]
    if abs(o) <= 1e-9 * h:
        return "node"
    if abs(o - h / 2) <= 1e-9 * h:
        return "cell"
    raise SupportError(f"last-axis origin {o} must be 0 or spacing/2 for an exact reflection")


def reflect_extend(A: GridField) -> GridField:
    """Extend a field on the upper half grid to the doubled grid O.

    Components with ``p`` indices equal to ``n`` pick up ``(-1)^p``; rank 0 is
    extended evenly.
    """
    layout = _interface_layout(A)
    if np.any(A.data[..., :INTERFACE_MARGIN, :] != 0):
        raise SupportError(f"field does not vanish within {INTERFACE_MARGIN} cells of x_n = 0")
    lower = np.flip(A.data, axis=A.n - 1) * reflection_signs(A.n, A.m)
    if layout == "node":
        data = np.concatenate([lower[..., :-1, :], A.data], axis=A.n - 1)
        origin_n = -A.upper[-1]
    else:
        data = np.concatenate([lower, A.data], axis=A.n - 1)
        origin_n = -A.upper[-1]
    origin = A.origin.copy()
    origin[-1] = origin_n
    dims = A.dims[:-1] + (data.shape[A.n - 1],)
    return GridField(A.n, A.m, dims, origin, A.spacing, data)


def restrict_upper(F: GridField) -> GridField:
    """Samples with ``x_n >= 0`` of a field on a doubled grid."""
    xn = F.axis(F.n - 1)
    keep = xn >= -1e-9 * F.spacing[-1]
    first = int(np.argmax(keep))
    data = F.data[..., first:, :]
    origin = F.origin.copy()
    origin[-1] = xn[first] if abs(xn[first]) > 1e-9 * F.spacing[-1] else 0.0
    return GridField(F.n, F.m, F.dims[:-1] + (data.shape[F.n - 1],), origin, F.spacing, data)


