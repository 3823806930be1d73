"""Hot kernels with a compiled core and a numpy fallback.

The compiled extension ``tensortomo._interp`` is used when it imports and
``TENSORTOMO_PURE`` is unset; otherwise the numpy implementation below runs.
Both produce the same numbers up to summation order.
"""
from __future__ import annotations

import os

import numpy as np


def interp_points_py(data, dims, origin, spacing, pts):
    """Multilinear interpolation of flat grid data at ``pts``; 0 outside."""
    dims = np.asarray(dims, dtype=np.int64)
    n = dims.size
    pts = np.asarray(pts, dtype=float)
    u = (pts - np.asarray(origin)) / np.asarray(spacing)
    inside = np.all((u >= 0.0) & (u <= dims - 1), axis=1)
    out = np.zeros((pts.shape[0], data.shape[1]), dtype=complex)
    if not inside.any():
        return out
    u = u[inside]
    base = np.minimum(np.floor(u).astype(np.int64), dims - 2)
    frac = u - base
    strides = np.ones(n, dtype=np.int64)
    for ax in range(n - 2, -1, -1):
        strides[ax] = strides[ax + 1] * dims[ax + 1]
    acc = np.zeros((u.shape[0], data.shape[1]), dtype=complex)
    for corner in range(1 << n):
        bits = np.array([(corner >> ax) & 1 for ax in range(n)])
        w = np.prod(np.where(bits, frac, 1.0 - frac), axis=1)
        flat = (base + bits) @ strides
        acc += w[:, None] * data[flat]
    out[inside] = acc
    return out


_compiled = None
if not os.environ.get("TENSORTOMO_PURE"):
    try:
        from . import _interp as _compiled  # type: ignore[attr-defined]
    except ImportError:  # extension not built
        _compiled = None

HAVE_COMPILED = _compiled is not None


def interp_points(data, dims, origin, spacing, pts, backend: str | None = None):
    """Dispatch to the compiled kernel when available.

    ``backend`` forces ``"compiled"`` or ``"python"``; ``None`` picks the best.
    """
    data = np.ascontiguousarray(data, dtype=complex)
    pts = np.ascontiguousarray(pts, dtype=float)
    if backend == "python" or (backend is None and not HAVE_COMPILED):
        return interp_points_py(data, dims, origin, spacing, pts)
    if not HAVE_COMPILED:
        raise RuntimeError("compiled kernel requested but not built")
    return _compiled.interp_points(
        data,
        np.ascontiguousarray(dims, dtype=np.int_),
        np.ascontiguousarray(origin, dtype=float),
        np.ascontiguousarray(spacing, dtype=float),
        pts,
    )
