"""Grid-sampled symmetric tensor fields, the inner derivative and Saint Venant operator."""
from __future__ import annotations

import csv
import itertools
import math
import struct
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from numpy.polynomial import Polynomial

from . import _kernels
from .tensor_algebra import (
    SymTensor,
    TensorSizeError,
    component_position,
    multi_indices,
    num_components,
)

MAGIC = b"MRTF"
FORMAT_VERSION = 1


class FieldFormatError(ValueError):
    """Malformed or non-finite field file."""


class FieldSizeError(FieldFormatError):
    """Payload size does not match the header."""


class ResolutionError(ValueError):
    """Grid too small for the requested stencil."""


class SupportError(ValueError):
    """Field does not vanish where compact support requires it."""


@dataclass(frozen=True)
class GridField:
    """Rank-``m`` symmetric tensor field sampled on a regular grid in R^n.

    ``data`` has shape ``dims + (C(n+m-1, m),)`` holding canonical components
    per grid point; axis ``i`` has coordinates ``origin[i] + k * spacing[i]``.
    """

    n: int
    m: int
    dims: tuple
    origin: np.ndarray
    spacing: np.ndarray
    data: np.ndarray

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        origin = np.array(self.origin, dtype=float).reshape(-1)
        spacing = np.array(self.spacing, dtype=float).reshape(-1)
        if len(dims) != self.n or origin.size != self.n or spacing.size != self.n:
            raise TensorSizeError("dims/origin/spacing must have n entries")
        if np.any(spacing <= 0):
            raise ValueError("spacing must be positive")
        data = np.array(self.data, dtype=complex)
        ncomp = num_components(self.n, self.m)
        if data.shape == dims and ncomp == 1:
            data = data[..., None]
        if data.shape != dims + (ncomp,):
            raise TensorSizeError(f"data shape {data.shape} != {dims + (ncomp,)}")
        for arr in (origin, spacing, data):
            arr.flags.writeable = False
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "data", data)

    @classmethod
    def zeros(cls, n, m, dims, origin, spacing) -> "GridField":
        return cls(n, m, dims, origin, spacing, np.zeros(tuple(dims) + (num_components(n, m),), complex))

    def with_data(self, data, m: int | None = None) -> "GridField":
        return GridField(self.n, self.m if m is None else m, self.dims, self.origin, self.spacing, data)

    @property
    def ncomp(self) -> int:
        return self.data.shape[-1]

    def axis(self, i: int) -> np.ndarray:
        return self.origin[i] + self.spacing[i] * np.arange(self.dims[i])

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*[self.axis(i) for i in range(self.n)], indexing="ij")

    def points(self) -> np.ndarray:
        return np.stack([g.ravel() for g in self.mesh()], axis=1)

    @property
    def upper(self) -> np.ndarray:
        return self.origin + self.spacing * (np.array(self.dims) - 1)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def component(self, index) -> np.ndarray:
        return self.data[..., component_position(self.n, index) if self.m else 0]

    def at(self, grid_index) -> SymTensor:
        return SymTensor(self.n, self.m, self.data[tuple(grid_index)])

    def sup_norm(self) -> float:
        return float(np.abs(self.data).max()) if self.data.size else 0.0

    def same_grid(self, other: "GridField") -> bool:
        return (
            self.n == other.n
            and self.dims == other.dims
            and np.array_equal(self.origin, other.origin)
            and np.array_equal(self.spacing, other.spacing)
        )

    def has_zero_ring(self, width: int = 2) -> bool:
        for ax in range(self.n):
            lo = np.take(self.data, range(width), axis=ax)
            hi = np.take(self.data, range(self.dims[ax] - width, self.dims[ax]), axis=ax)
            if np.any(lo != 0) or np.any(hi != 0):
                return False
        return True

    def interpolate(self, pts, backend: str | None = None) -> np.ndarray:
        """Multilinear interpolation of all components at ``pts`` (shape (P, n))."""
        flat = self.data.reshape(-1, self.ncomp)
        return _kernels.interp_points(flat, self.dims, self.origin, self.spacing, pts, backend)

    def support_extent(self) -> np.ndarray:
        """Per-axis width of the bounding box of the nonzero samples."""
        nz = np.argwhere(np.any(self.data != 0, axis=-1))
        if nz.size == 0:
            return np.zeros(self.n)
        return (nz.max(axis=0) - nz.min(axis=0)) * self.spacing

    def __add__(self, other: "GridField") -> "GridField":
        if not (self.same_grid(other) and self.m == other.m):
            raise TensorSizeError("fields live on different grids or ranks")
        return self.with_data(self.data + other.data)

    def __sub__(self, other: "GridField") -> "GridField":
        return self + other * -1

    def __mul__(self, alpha) -> "GridField":
        return self.with_data(self.data * complex(alpha))

    __rmul__ = __mul__


def cube_grid(n: int, num: int, lo: float = -0.5, hi: float = 0.5):
    """``(dims, origin, spacing)`` for ``num`` samples per axis on ``[lo, hi]^n``."""
    h = (hi - lo) / (num - 1)
    return (num,) * n, np.full(n, lo), np.full(n, h)


# --- smooth compactly supported profiles -----------------------------------


def mollifier(s, left: float = 0.5, right: float = 0.5) -> np.ndarray:
    """C^inf profile on (-1, 1), ``exp(-left/(1+s) - right/(1-s))`` scaled to 1 at 0.

    ``left == right == 0.5`` is the standard ``exp(1 - 1/(1-s^2))``.  Unequal
    weights skew the profile so its two endpoints decay at different rates.
    """
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1
    si = s[inside]
    out[inside] = np.exp(left + right - left / (1 + si) - right / (1 - si))
    return out


@lru_cache(maxsize=None)
def _mollifier_poly(order: int) -> Polynomial:
    # psi^(k) = psi * P_k(s) / (1 - s^2)^(2k) for psi = exp(-1/(1-s^2))
    one_minus = Polynomial([1.0, 0.0, -1.0])
    s = Polynomial([0.0, 1.0])
    p = Polynomial([1.0])
    for k in range(order):
        p = -2 * s * p + one_minus * (one_minus * p.deriv() + 4 * k * s * p)
    return p


def mollifier_derivative(s, order: int = 0) -> np.ndarray:
    """Exact ``order``-th derivative of the symmetric :func:`mollifier`."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1
    si = s[inside]
    base = np.exp(1.0 - 1.0 / (1.0 - si**2))
    out[inside] = base * _mollifier_poly(order)(si) / (1.0 - si**2) ** (2 * order)
    return out


def bump(points_or_mesh, center, radius, skew=None) -> np.ndarray:
    """Separable product of per-axis mollifiers ``prod_i b((x_i - c_i)/r_i)``.

    ``skew`` optionally gives per-axis ``(left, right)`` endpoint weights.
    """
    coords = points_or_mesh
    n = len(center)
    radius = np.broadcast_to(np.asarray(radius, float), (n,))
    out = 1.0
    for i in range(n):
        lr = (0.5, 0.5) if skew is None or skew[i] is None else skew[i]
        out = out * mollifier((coords[i] - center[i]) / radius[i], *lr)
    return out


# --- differential operators ---------------------------------------------------


def central_diff(arr: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Second-order central difference along ``axis``; boundary samples set to 0."""
    out = np.zeros_like(arr)
    n = arr.shape[axis]
    sl_c = [slice(None)] * arr.ndim
    sl_p = [slice(None)] * arr.ndim
    sl_m = [slice(None)] * arr.ndim
    sl_c[axis] = slice(1, n - 1)
    sl_p[axis] = slice(2, n)
    sl_m[axis] = slice(0, n - 2)
    out[tuple(sl_c)] = (arr[tuple(sl_p)] - arr[tuple(sl_m)]) / (2.0 * h)
    return out


def inner_derivative(v: GridField) -> GridField:
    """Symmetrized gradient ``d v = sigma(grad v)`` by central differences.

    For an output index ``J`` of length ``m`` this is
    ``(1/m) sum_p  D_{J_p} v_{J without p}``.
    """
    if min(v.dims) < 3:
        raise ResolutionError(f"grid {v.dims} too small for a central difference")
    n, mv = v.n, v.m
    m = mv + 1
    grads = [central_diff(v.data, ax, v.spacing[ax]) for ax in range(n)]
    out = np.zeros(v.dims + (num_components(n, m),), dtype=complex)
    for c, J in enumerate(multi_indices(n, m)):
        for p in range(m):
            rest = J[:p] + J[p + 1 :]
            out[..., c] += grads[J[p]][..., component_position(n, rest) if mv else 0]
        out[..., c] /= m
    return GridField(n, m, v.dims, v.origin, v.spacing, out)


@dataclass(frozen=True)
class SaintVenantField:
    """Values of ``W u`` in ``S^m (x) S^m``: ``data[..., I, J]`` over canonical I, J."""

    n: int
    m: int
    dims: tuple
    origin: np.ndarray
    spacing: np.ndarray
    data: np.ndarray

    def sup_norm(self, margin: int = 0) -> float:
        d = self.data
        if margin:
            d = d[tuple(slice(margin, s - margin) for s in self.dims)]
        return float(np.abs(d).max()) if d.size else 0.0

    def value(self, I, J) -> np.ndarray:
        return self.data[..., component_position(self.n, I), component_position(self.n, J)]


def _distinct_perms(idx):
    return sorted(set(itertools.permutations(idx)))


def saint_venant(u: GridField) -> SaintVenantField:
    """Saint Venant operator on a rank-``m`` field via repeated central differences.

    ``(Wu)_{i j} = sigma(i) sigma(j) sum_p (-1)^p C(m,p)
    d^m u_{i_1..i_{m-p} j_1..j_p} / dx_{j_{p+1}}..dx_{j_m} dx_{i_{m-p+1}}..dx_{i_m}``.
    """
    n, m = u.n, u.m
    if min(u.dims) < 2 * m + 5:
        raise ResolutionError(f"grid {u.dims} cannot resolve order-{m} derivatives")
    cache: dict = {}

    def deriv(comp_pos: int, axes: tuple) -> np.ndarray:
        key = (comp_pos, tuple(sorted(axes)))
        if key not in cache:
            arr = u.data[..., comp_pos]
            for ax in key[1]:
                arr = central_diff(arr, ax, u.spacing[ax])
            cache[key] = arr
        return cache[key]

    idx = multi_indices(n, m)
    out = np.zeros(u.dims + (len(idx), len(idx)), dtype=complex)
    for a, I in enumerate(idx):
        perms_i = _distinct_perms(I)
        for b, J in enumerate(idx):
            perms_j = _distinct_perms(J)
            acc = 0
            for ip in perms_i:
                for jp in perms_j:
                    for p in range(m + 1):
                        comp = ip[: m - p] + jp[:p]
                        axes = jp[p:] + ip[m - p :]
                        pos = component_position(n, comp) if m else 0
                        acc = acc + (-1) ** p * math.comb(m, p) * deriv(pos, axes)
            out[..., a, b] = acc / (len(perms_i) * len(perms_j))
    return SaintVenantField(n, m, u.dims, u.origin, u.spacing, out)


# --- I/O ------------------------------------------------------------------------


def write_field(field: GridField, path) -> None:
    """Binary ``MRTF`` format; see the README for the byte layout."""
    path = Path(path)
    header = MAGIC + struct.pack("<H", FORMAT_VERSION)
    header += struct.pack(f"<{2 + field.n}I", field.n, field.m, *field.dims)
    header += struct.pack(f"<{2 * field.n}d", *field.origin, *field.spacing)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(field.data, dtype="<c16").tobytes())


def read_field(path) -> GridField:
    raw = Path(path).read_bytes()
    if len(raw) < 14 or raw[:4] != MAGIC:
        raise FieldFormatError("missing MRTF magic bytes")
    (version,) = struct.unpack_from("<H", raw, 4)
    if version != FORMAT_VERSION:
        raise FieldFormatError(f"unsupported format version {version}")
    n, m = struct.unpack_from("<2I", raw, 6)
    if not 1 <= n <= 8 or m > 16:
        raise FieldFormatError(f"implausible header n={n}, m={m}")
    off = 14
    need = off + 4 * n + 16 * n
    if len(raw) < need:
        raise FieldFormatError("truncated header")
    dims = struct.unpack_from(f"<{n}I", raw, off)
    off += 4 * n
    vals = struct.unpack_from(f"<{2 * n}d", raw, off)
    off += 16 * n
    origin, spacing = np.array(vals[:n]), np.array(vals[n:])
    count = int(np.prod(dims)) * num_components(n, m)
    payload = raw[off:]
    if len(payload) != 16 * count:
        raise FieldSizeError(f"payload holds {len(payload) // 16} complex values, header implies {count}")
    data = np.frombuffer(payload, dtype="<c16").astype(complex).reshape(tuple(dims) + (-1,))
    if not (np.all(np.isfinite(data)) and np.all(np.isfinite(origin)) and np.all(np.isfinite(spacing))):
        raise FieldFormatError("non-finite values in field file")
    return GridField(n, m, dims, origin, spacing, data)


def _index_label(idx) -> str:
    return "".join(str(i + 1) for i in idx) or "0"


def write_field_csv(field: GridField, path) -> None:
    """Text twin: one row per grid point, coordinates then (re, im) per component."""
    labels = [_index_label(i) for i in multi_indices(field.n, field.m)]
    cols = [f"x{i + 1}" for i in range(field.n)]
    for lab in labels:
        cols += [f"re_{lab}", f"im_{lab}"]
    pts = field.points()
    flat = field.data.reshape(-1, field.ncomp)
    with open(path, "w", newline="") as fh:
        fh.write(
            f"# MRTF-CSV n={field.n} m={field.m} dims={'x'.join(map(str, field.dims))} "
            "units: coordinates in domain length, components dimensionless\n"
        )
        w = csv.writer(fh)
        w.writerow(cols)
        for p, row in zip(pts, flat):
            vals = [repr(float(x)) for x in p]
            for z in row:
                vals += [repr(float(z.real)), repr(float(z.imag))]
            w.writerow(vals)


def read_field_csv(path) -> GridField:
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first.startswith("# MRTF-CSV"):
            raise FieldFormatError("missing MRTF-CSV metadata line")
        meta = dict(tok.split("=", 1) for tok in first.split()[2:5])
        n, m = int(meta["n"]), int(meta["m"])
        dims = tuple(int(d) for d in meta["dims"].split("x"))
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    ncomp = num_components(n, m)
    if len(header) != n + 2 * ncomp:
        raise FieldSizeError(f"{len(header)} columns, expected {n + 2 * ncomp}")
    if len(body) != int(np.prod(dims)):
        raise FieldSizeError(f"{len(body)} rows, expected {int(np.prod(dims))}")
    arr = np.array(body, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise FieldFormatError("non-finite values in field file")
    coords = arr[:, :n].reshape(dims + (n,))
    origin = coords[(0,) * n]
    spacing = np.array(
        [coords[tuple(1 if a == i else 0 for a in range(n))][i] - origin[i] if dims[i] > 1 else 1.0 for i in range(n)]
    )
    data = (arr[:, n::2] + 1j * arr[:, n + 1 :: 2]).reshape(dims + (ncomp,))
    return GridField(n, m, dims, origin, spacing, data)
