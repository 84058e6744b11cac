"""Backend selection for the hot Gram-assembly path.

The compiled Cython core is preferred when it imported cleanly; the blocked
numpy twin is the fallback. Override with PINN_SPECTRAL_BACKEND=cython|numpy.
"""

import os

import numpy as np

from . import _gram_numpy

try:
    from . import _fastgram

    _HAVE_FAST = True
except ImportError:
    _fastgram = None
    _HAVE_FAST = False

_env = os.environ.get("PINN_SPECTRAL_BACKEND", "auto").strip().lower()
if _env == "numpy":
    _ACTIVE = "numpy"
elif _env == "cython":
    if not _HAVE_FAST:
        raise ImportError(
            "PINN_SPECTRAL_BACKEND=cython but the compiled core is not available"
        )
    _ACTIVE = "cython"
elif _env in ("", "auto"):
    _ACTIVE = "cython" if _HAVE_FAST else "numpy"
else:
    raise ValueError(f"unrecognized PINN_SPECTRAL_BACKEND value: {_env!r}")


def backend_name():
    """Name of the active Gram backend, 'cython' or 'numpy'."""
    return _ACTIVE


def mirror_blocks(xr, xc, gamma, amp, s_v, p_ord, q_ord):
    """Derivative blocks of a 1-d mirror/squared-exponential kernel.

    Returns an array of shape (len(p_ord), len(xr), len(xc)) whose k-th slab
    is d^p[k]/dx^p[k] d^q[k]/dy^q[k] K(x_i, y_j).
    """
    xr = np.ascontiguousarray(xr, dtype=np.float64)
    xc = np.ascontiguousarray(xc, dtype=np.float64)
    p_ord = np.ascontiguousarray(p_ord, dtype=np.int64)
    q_ord = np.ascontiguousarray(q_ord, dtype=np.int64)
    if _ACTIVE == "cython":
        return _fastgram.mirror_blocks(xr, xc, gamma, amp, s_v, p_ord, q_ord)
    return _gram_numpy.mirror_blocks(xr, xc, gamma, amp, s_v, p_ord, q_ord)
