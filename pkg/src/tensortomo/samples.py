"""Deterministic sample fields and coefficient sets shipped with the package."""
from __future__ import annotations

import numpy as np

from .recovery import CoefficientSet
from .tensor_algebra import num_components
from .tensor_fields import GridField, bump, cube_grid

# x3 profile of the decay fixture: unequal endpoint weights avoid the zeros of
# a symmetric bump's Fourier transform, so cross terms shrink at every halving
DECAY_SKEW = (0.2, 2.0)


def half_grid(num: int = 65, height: float = 1.0, width: float = 1.0, num_normal: int | None = None):
    """``(dims, origin, spacing)`` on ``[-w/2, w/2]^2 x [0, height]`` with nodes on ``x3 = 0``."""
    num_normal = num if num_normal is None else num_normal
    dxy = width / (num - 1)
    dz = height / (num_normal - 1)
    return (num, num, num_normal), np.array([-width / 2, -width / 2, 0.0]), np.array([dxy, dxy, dz])


def bump_field(m: int, grid, center, radius, tensor, skew=None, n: int = 3) -> GridField:
    """``bump(x) * tensor`` with constant canonical components ``tensor``."""
    dims, origin, spacing = grid
    g = GridField.zeros(n, m, dims, origin, spacing)
    prof = bump(g.mesh(), center, radius, skew)
    tensor = np.asarray(tensor, dtype=complex).reshape(-1)
    if tensor.size != num_components(n, m):
        raise ValueError(f"need {num_components(n, m)} components, got {tensor.size}")
    return g.with_data(prof[..., None] * tensor)


def decay_wset(num: int = 65) -> CoefficientSet:
    """m = 2 coefficient differences used for the cross-term decay sweep."""
    grid = half_grid(num)
    skew = [None, None, DECAY_SKEW]
    W0 = bump_field(0, grid, (0.05, -0.1, 0.5), (0.35, 0.35, 0.4), [1.0], skew)
    W1 = bump_field(1, grid, (-0.05, 0.05, 0.5), (0.35, 0.35, 0.4), [0.8, -0.5, 0.6], skew)
    Wbar = bump_field(0, grid, (0.0, 0.0, 0.5), (0.3, 0.3, 0.4), [0.7], skew)
    return CoefficientSet(2, (W0, W1), Wbar)


def fourier_wset() -> CoefficientSet:
    """Scalar-only (m = 1) set on a tall half grid, for the Fourier cross-check.

    The support is wide in ``x3`` compared with the cross-term wavelength at the
    smallest ``h``, so the cross terms are far below the main term there.
    """
    grid = half_grid(33, height=2.0, num_normal=129)
    W0 = bump_field(0, grid, (0.05, -0.05, 1.0), (0.4, 0.4, 0.9), [1.0], [None, None, (4.0, 4.0)])
    return CoefficientSet(1, (W0,), None)


def sample_field(m: int, num: int = 65, seed: int = 0) -> GridField:
    """Rank-``m`` field on the unit cube: a sum of three bumps with random constant tensors."""
    rng = np.random.default_rng(seed)
    grid = cube_grid(3, num)
    out = GridField.zeros(3, m, *grid)
    for _ in range(3):
        center = rng.uniform(-0.12, 0.12, 3)
        radius = rng.uniform(0.25, 0.32, 3)
        tensor = rng.normal(size=num_components(3, m))
        out = out + bump_field(m, grid, center, radius, tensor)
    return out


def random_potential(m: int, rng, num: int = 65) -> GridField:
    """Rank-``m`` smooth compactly supported potential for kernel checks."""
    grid = cube_grid(3, num)
    center = rng.uniform(-0.03, 0.03, 3)
    radius = rng.uniform(0.42, 0.45, 3)
    tensor = rng.normal(size=num_components(3, m))
    return bump_field(m, grid, center, radius, tensor, skew=[(1.0, 1.0)] * 3)
