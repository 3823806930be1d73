# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled multilinear interpolation of multi-component grid data."""
import numpy as np
cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()

DEF MAXDIM = 8


def interp_points(const double complex[:, ::1] data,
                  const long[::1] dims,
                  const double[::1] origin,
                  const double[::1] spacing,
                  const double[:, ::1] pts):
    """Interpolate ``data`` (flat C-order grid x components) at ``pts``.

    Points outside the sampled box get 0.
    """
    cdef Py_ssize_t npts = pts.shape[0]
    cdef Py_ssize_t ncomp = data.shape[1]
    cdef int n = <int> dims.shape[0]
    out_arr = np.zeros((npts, ncomp), dtype=np.complex128)
    cdef double complex[:, ::1] out = out_arr
    cdef long stride[MAXDIM]
    cdef long base[MAXDIM]
    cdef double frac[MAXDIM]
    cdef Py_ssize_t p, c, corner, flat
    cdef int ax, inside, ncorner
    cdef double u, w
    if n > MAXDIM:
        raise ValueError("too many dimensions")
    stride[n - 1] = 1
    for ax in range(n - 2, -1, -1):
        stride[ax] = stride[ax + 1] * dims[ax + 1]
    ncorner = 1 << n
    with nogil:
        for p in range(npts):
            inside = 1
            for ax in range(n):
                u = (pts[p, ax] - origin[ax]) / spacing[ax]
                if u < 0.0 or u > dims[ax] - 1:
                    inside = 0
                    break
                base[ax] = <long> floor(u)
                if base[ax] >= dims[ax] - 1:
                    base[ax] = dims[ax] - 2
                frac[ax] = u - base[ax]
            if not inside:
                continue
            for corner in range(ncorner):
                w = 1.0
                flat = 0
                for ax in range(n):
                    if (corner >> ax) & 1:
                        w = w * frac[ax]
                        flat = flat + (base[ax] + 1) * stride[ax]
                    else:
                        w = w * (1.0 - frac[ax])
                        flat = flat + base[ax] * stride[ax]
                if w == 0.0:
                    continue
                for c in range(ncomp):
                    out[p, c] = out[p, c] + w * data[flat, c]
    return out_arr
