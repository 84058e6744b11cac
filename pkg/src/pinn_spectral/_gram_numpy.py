"""Blocked numpy implementation of the mirror-Gaussian derivative blocks.

Drop-in twin of the compiled `_fastgram.mirror_blocks`. Rows are processed in
chunks so peak memory stays bounded for large Gram matrices.
"""

import numpy as np

_BLOCK_ROWS = 1024


def _gauss_deriv_stack(t, mmax):
    """Probabilists' Hermite values He_m(t) for m = 0..mmax, as a list."""
    h = [np.ones_like(t)]
    if mmax >= 1:
        h.append(t)
    for m in range(2, mmax + 1):
        h.append(t * h[m - 1] - (m - 1) * h[m - 2])
    return h


def mirror_blocks(xr, xc, gamma, amp, s_v, p_ord, q_ord):
    """Return array (len(p_ord), len(xr), len(xc)) of derivative blocks."""
    xr = np.asarray(xr, dtype=float)
    xc = np.asarray(xc, dtype=float)
    p_ord = np.asarray(p_ord, dtype=np.int64)
    q_ord = np.asarray(q_ord, dtype=np.int64)
    if np.any(p_ord < 0) or np.any(q_ord < 0):
        raise ValueError("derivative orders must be non-negative")
    nr, nc, nk = xr.size, xc.size, p_ord.size
    out = np.empty((nk, nr, nc), dtype=np.float64)
    if nk == 0:
        return out

    mm = p_ord + q_ord
    mmax = int(mm.max())
    sg = np.sqrt(gamma)
    cm = (-sg) ** np.arange(mmax + 1)
    qs = np.where(q_ord % 2 == 1, -1.0, 1.0)

    for i0 in range(0, nr, _BLOCK_ROWS):
        i1 = min(i0 + _BLOCK_ROWS, nr)
        xb = xr[i0:i1, None]
        tu = sg * (xb - xc[None, :])
        eu = np.exp(-0.5 * tu * tu)
        hu = _gauss_deriv_stack(tu, mmax)
        if s_v != 0.0:
            tv = sg * (xb + xc[None, :])
            ev = np.exp(-0.5 * tv * tv)
            hv = _gauss_deriv_stack(tv, mmax)
            for k in range(nk):
                m = int(mm[k])
                out[k, i0:i1] = amp * cm[m] * (qs[k] * hu[m] * eu + s_v * hv[m] * ev)
        else:
            for k in range(nk):
                m = int(mm[k])
                out[k, i0:i1] = amp * cm[m] * qs[k] * hu[m] * eu
    return out
