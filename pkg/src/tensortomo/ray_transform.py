"""Ray transforms and momentum ray transforms of grid tensor fields.

All transforms are trapezoid sums over the chord of the ray through the grid box,
with step at most half the smallest grid spacing and multilinear interpolation
of the components.  The parameter ``t = 0`` sits at the ray's base point.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .tensor_algebra import TensorSizeError, power_weights
from .tensor_fields import GridField

MAX_MOMENT = 8


class DirectionError(ValueError):
    """Zero or (for restricted transforms) non-unit direction."""


@dataclass(frozen=True)
class Ray:
    x: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float).reshape(-1)
        xi = np.array(self.xi, dtype=float).reshape(-1)
        if x.shape != xi.shape:
            raise TensorSizeError("base point and direction differ in length")
        if not np.linalg.norm(xi) > 0:
            raise DirectionError("ray direction must be nonzero")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xi", xi)

    def shifted(self, a: float) -> "Ray":
        return Ray(self.x + a * self.xi, self.xi)


@dataclass
class TensorPolyField:
    """Sum ``F = f^(0) + ... + f^(m)`` of fields of ranks 0..m on one grid."""

    parts: list = field(default_factory=list)

    def __post_init__(self):
        for p, f in enumerate(self.parts):
            if f.m != p:
                raise TensorSizeError(f"component {p} has rank {f.m}")
            if not f.same_grid(self.parts[0]):
                raise TensorSizeError("components live on different grids")

    @property
    def m(self) -> int:
        return len(self.parts) - 1

    def __add__(self, other: "TensorPolyField") -> "TensorPolyField":
        if len(self.parts) != len(other.parts):
            raise TensorSizeError("poly fields of different order")
        return TensorPolyField([a + b for a, b in zip(self.parts, other.parts)])


def chord(field: GridField, x, xi):
    """Parameter interval ``[t0, t1]`` where ``x + t xi`` lies in the grid box, or None."""
    lo, hi = field.origin, field.upper
    t0, t1 = -np.inf, np.inf
    for i in range(field.n):
        if xi[i] == 0.0:
            if x[i] < lo[i] or x[i] > hi[i]:
                return None
            continue
        # tiny components give infinite bounds, which is the right limit
        with np.errstate(over="ignore"):
            a = (lo[i] - x[i]) / xi[i]
            b = (hi[i] - x[i]) / xi[i]
        t0, t1 = max(t0, min(a, b)), min(t1, max(a, b))
    if not t1 > t0:
        return None
    return t0, t1


def line_nodes(field: GridField, x, xi, step_fraction: float = 0.5):
    """Trapezoid nodes and weights along the chord; ``None`` when the line misses."""
    span = chord(field, x, xi)
    if span is None:
        return None
    t0, t1 = span
    dt_max = step_fraction * field.spacing.min() / np.linalg.norm(xi)
    nint = max(1, math.ceil((t1 - t0) / dt_max - 1e-9))
    t = np.linspace(t0, t1, nint + 1)
    w = np.full(t.size, (t1 - t0) / nint)
    w[0] *= 0.5
    w[-1] *= 0.5
    return t, w


def line_moment(field: GridField, x, xi, k: int, contract=None, step_fraction: float = 0.5) -> complex:
    """``int t^k <f(x + t xi), w^m> dt`` with ``w = contract`` (default ``xi``)."""
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    nodes = line_nodes(field, x, xi, step_fraction)
    if nodes is None:
        return 0j
    t, w = nodes
    vals = field.interpolate(x[None, :] + t[:, None] * xi[None, :])
    cw = power_weights(field.n, field.m, xi if contract is None else contract)
    return complex(np.sum(w * t**k * (vals @ cw)))


def _check_k(k: int):
    if not 0 <= k <= MAX_MOMENT:
        raise ValueError(f"moment order {k} outside 0..{MAX_MOMENT}")


def ray_transform(f: GridField, ray: Ray) -> complex:
    """``I f(x, xi) = int <f(x + t xi), xi^m> dt``; 0 for rays missing the grid."""
    return line_moment(f, ray.x, ray.xi, 0)


def momentum_transform(f: GridField, ray: Ray, k: int) -> complex:
    """``I^k f(x, xi) = int t^k <f(x + t xi), xi^m> dt``."""
    _check_k(k)
    return line_moment(f, ray.x, ray.xi, k)


def restricted_moment(f: GridField, ray: Ray, k: int) -> complex:
    """``J^k``: the momentum transform on unit directions only."""
    if abs(np.linalg.norm(ray.xi) - 1.0) > 1e-12:
        raise DirectionError(f"|xi| = {np.linalg.norm(ray.xi)!r} is not 1")
    return momentum_transform(f, ray, k)


def poly_moment(F: TensorPolyField, ray: Ray, k: int) -> complex:
    """``I^{m,k} F = sum_p I^k f^(p)``, each part with its own rank-p power of xi."""
    return sum((momentum_transform(f, ray, k) for f in F.parts), 0j)


def batch_momentum(f: GridField, rays, ks, threads: int = 1) -> np.ndarray:
    """``I^k`` for many rays; results are in input order regardless of ``threads``."""
    jobs = list(zip(rays, ks))
    if threads <= 1:
        return np.array([momentum_transform(f, r, k) for r, k in jobs], dtype=complex)
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return np.array(list(ex.map(lambda job: momentum_transform(f, *job), jobs)), dtype=complex)


def read_ray_batch(path, n: int):
    """CSV with columns ``x1..xn, xi1..xin, k`` (header row required)."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    header, body = rows[0], rows[1:]
    if len(header) != 2 * n + 1:
        raise TensorSizeError(f"ray batch needs {2 * n + 1} columns, got {len(header)}")
    rays, ks = [], []
    for row in body:
        vals = [float(v) for v in row]
        rays.append(Ray(vals[:n], vals[n : 2 * n]))
        ks.append(int(vals[2 * n]))
    return rays, ks


def write_ray_batch(path, rays, ks, values=None) -> None:
    """Write a ray batch; with ``values`` the ``re, im`` columns are appended."""
    n = rays[0].x.size if rays else 0
    cols = [f"x{i + 1}" for i in range(n)] + [f"xi{i + 1}" for i in range(n)] + ["k"]
    if values is not None:
        cols += ["re", "im"]
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for i, (r, k) in enumerate(zip(rays, ks)):
            row = [repr(float(v)) for v in r.x] + [repr(float(v)) for v in r.xi] + [int(k)]
            if values is not None:
                row += [repr(float(values[i].real)), repr(float(values[i].imag))]
            w.writerow(row)
