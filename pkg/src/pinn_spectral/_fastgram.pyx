# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled core for mirror-Gaussian kernel derivative blocks.

Evaluates, in a single pass over point pairs, every requested derivative
block d^p/dx^p d^q/dy^q K(x, y) of a 1-d kernel of the form

    K(x, y) = amp * (exp(-gamma (x-y)^2 / 2) + s_v * exp(-gamma (x+y)^2 / 2))

(s_v = 0 gives the plain squared-exponential). All blocks share the two
exponentials per pair, which is where the speedup over a vectorized numpy
evaluation comes from. Derivatives of the Gaussian factor are generated with
the probabilists' Hermite recursion.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, sqrt

cnp.import_array()

# fixed capacity for the per-pair Hermite recursion buffers
cdef enum:
    MAXM = 24


def mirror_blocks(double[::1] xr, double[::1] xc, double gamma, double amp,
                  double s_v, cnp.int64_t[::1] p_ord, cnp.int64_t[::1] q_ord):
    """Return array (len(p_ord), len(xr), len(xc)) of derivative blocks."""
    cdef Py_ssize_t nr = xr.shape[0]
    cdef Py_ssize_t nc = xc.shape[0]
    cdef Py_ssize_t nk = p_ord.shape[0]
    cdef Py_ssize_t i, j, k
    cdef int m, mmax

    if nk == 0:
        return np.empty((0, nr, nc), dtype=np.float64)

    mm_arr = np.empty(nk, dtype=np.int64)
    qs_arr = np.empty(nk, dtype=np.float64)
    cdef cnp.int64_t[::1] mm = mm_arr
    cdef double[::1] qs = qs_arr
    mmax = 0
    for k in range(nk):
        if p_ord[k] < 0 or q_ord[k] < 0:
            raise ValueError("derivative orders must be non-negative")
        mm[k] = p_ord[k] + q_ord[k]
        if mm[k] > MAXM:
            raise ValueError("derivative order too large for compiled core")
        if mm[k] > mmax:
            mmax = <int> mm[k]
        qs[k] = -1.0 if (q_ord[k] & 1) else 1.0

    out = np.empty((nk, nr, nc), dtype=np.float64)
    cdef double[:, :, ::1] o = out

    cdef double sg = sqrt(gamma)
    cdef double cm[MAXM + 1]
    cdef double hu[MAXM + 1]
    cdef double hv[MAXM + 1]
    cm[0] = 1.0
    for m in range(1, mmax + 1):
        cm[m] = -sg * cm[m - 1]

    cdef bint use_v = s_v != 0.0
    cdef double xi, u, v, tu, tv, eu, ev
    for i in range(nr):
        xi = xr[i]
        for j in range(nc):
            u = xi - xc[j]
            tu = sg * u
            eu = exp(-0.5 * tu * tu)
            hu[0] = 1.0
            if mmax >= 1:
                hu[1] = tu
            for m in range(2, mmax + 1):
                hu[m] = tu * hu[m - 1] - (m - 1) * hu[m - 2]
            if use_v:
                v = xi + xc[j]
                tv = sg * v
                ev = exp(-0.5 * tv * tv)
                hv[0] = 1.0
                if mmax >= 1:
                    hv[1] = tv
                for m in range(2, mmax + 1):
                    hv[m] = tv * hv[m - 1] - (m - 1) * hv[m - 2]
                for k in range(nk):
                    m = <int> mm[k]
                    o[k, i, j] = amp * cm[m] * (qs[k] * hu[m] * eu + s_v * hv[m] * ev)
            else:
                for k in range(nk):
                    m = <int> mm[k]
                    o[k, i, j] = amp * cm[m] * qs[k] * hu[m] * eu
    return out
