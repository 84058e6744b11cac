"""Gaussian-process regression for PINN posterior means.

The joint covariance of (L[f] at bulk points, f at boundary points) under a
GP prior with kernel K is assembled in blocks, observation noise is added on
the diagonal, and the posterior mean at new points is the usual GPR formula
solved by Cholesky factorization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from . import kernels, operators
from .errors import DomainError, IllConditionedError

_JITTER_START = 1e-12
_JITTER_MAX = 1e-6


@dataclass(frozen=True)
class CollocationSet:
    """Sampled bulk/boundary points plus per-block noise levels.

    eta_bulk and eta_boundary are always recomputed from the point counts
    and noise variances, never stored.
    """

    bulk_x: np.ndarray
    boundary_x: np.ndarray
    sigma2_bulk: float = 1.0
    sigma2_boundary: float = 1.0

    def __post_init__(self):
        bx = np.asarray(self.bulk_x, dtype=float)
        if bx.ndim == 1:
            bx = bx[:, None]
        if bx.size == 0:
            bx = bx.reshape(0, max(bx.shape[1] if bx.ndim == 2 else 1, 1))
        dx = np.asarray(self.boundary_x, dtype=float)
        if dx.ndim == 1:
            dx = dx[:, None]
        if dx.size == 0:
            dx = dx.reshape(0, bx.shape[1])
        if bx.shape[0] + dx.shape[0] < 1:
            raise DomainError("need at least one collocation point")
        if bx.shape[0] and dx.shape[0] and bx.shape[1] != dx.shape[1]:
            raise DomainError("bulk and boundary dimensions differ")
        if not (np.all(np.isfinite(bx)) and np.all(np.isfinite(dx))):
            raise DomainError("collocation points contain non-finite values")
        for name in ("sigma2_bulk", "sigma2_boundary"):
            v = float(getattr(self, name))
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be positive and finite")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "bulk_x", bx)
        object.__setattr__(self, "boundary_x", dx)

    @property
    def n_bulk(self):
        return self.bulk_x.shape[0]

    @property
    def n_boundary(self):
        return self.boundary_x.shape[0]

    @property
    def eta_bulk(self):
        return self.n_bulk / self.sigma2_bulk

    @property
    def eta_boundary(self):
        return self.n_boundary / self.sigma2_boundary


@dataclass(frozen=True)
class ProblemData:
    """Source and boundary data, the operator, and the prior kernel."""

    source: object  # callable on a point
    boundary: object  # callable on a boundary point
    operator: operators.LinearDiffOp
    kernel: kernels.KernelSpec


def eval_field(fn, pts):
    """Evaluate a scalar field pointwise on an (n, d) point array."""
    pts = np.asarray(pts, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    vals = np.empty(pts.shape[0])
    for i, p in enumerate(pts):
        vals[i] = fn(p[0]) if p.size == 1 else fn(p)
    if not np.all(np.isfinite(vals)):
        raise DomainError("field evaluation produced non-finite values")
    return vals


def sample_collocation(
    geometry, n_bulk, n_boundary, seed, sigma2_bulk=1.0, sigma2_boundary=1.0
):
    """Draw i.i.d. uniform collocation points from the geometry."""
    if n_bulk < 0 or n_boundary < 0 or n_bulk + n_boundary < 1:
        raise DomainError("need at least one collocation point")
    rng = np.random.default_rng(seed)
    bulk = geometry.sample_bulk(n_bulk, rng)
    boundary = geometry.sample_boundary(n_boundary, rng)
    return CollocationSet(
        bulk_x=bulk,
        boundary_x=boundary,
        sigma2_bulk=sigma2_bulk,
        sigma2_boundary=sigma2_boundary,
    )


def _assemble(problem, colloc):
    """K_PINN, noise diagonal (vector), and data vector y."""
    op, spec = problem.operator, problem.kernel
    nb, nd = colloc.n_bulk, colloc.n_boundary
    n = nb + nd
    K = np.empty((n, n))
    if nb:
        K[:nb, :nb] = operators.kernel_block(
            op, spec, "both", colloc.bulk_x, colloc.bulk_x
        )
    if nd:
        K[nb:, nb:] = kernels.eval_gram(spec, colloc.boundary_x, colloc.boundary_x)
    if nb and nd:
        lk = operators.kernel_block(op, spec, "left", colloc.bulk_x, colloc.boundary_x)
        K[:nb, nb:] = lk
        K[nb:, :nb] = lk.T
    noise = np.concatenate(
        [np.full(nb, colloc.sigma2_bulk), np.full(nd, colloc.sigma2_boundary)]
    )
    y = np.concatenate(
        [
            eval_field(problem.source, colloc.bulk_x) if nb else np.empty(0),
            eval_field(problem.boundary, colloc.boundary_x) if nd else np.empty(0),
        ]
    )
    return K, noise, y


def assemble_kpinn(problem, colloc):
    """Blocked PINN covariance, noise matrix, and stacked data vector.

    K_PINN rows/cols are ordered bulk first, then boundary; the bulk block
    carries the operator on both kernel arguments, the off-diagonal blocks
    on one. The noise matrix is diagonal (returned sparse).
    """
    K, noise, y = _assemble(problem, colloc)
    return K, sp.diags(noise, format="csr"), y


def _condition_estimate(A):
    if A.shape[0] <= 4096:
        ev = np.linalg.eigvalsh(A)
        lo = np.min(np.abs(ev))
        return float(np.max(np.abs(ev)) / lo) if lo > 0 else float("inf")
    d = np.abs(np.diag(A))
    return float(d.max() / d.min()) if d.min() > 0 else float("inf")


def solve_spd(A, B, what="system"):
    """Solve A X = B for symmetric positive-definite A with jitter escalation.

    Tries a clean Cholesky first, then adds jitter 1e-12 * trace/n growing
    tenfold up to 1e-6 * trace/n before giving up.
    """
    n = A.shape[0]
    base = float(np.trace(A)) / n if n else 0.0
    if base <= 0:
        base = 1.0
    jitters = [0.0]
    j = _JITTER_START
    while j <= _JITTER_MAX * 1.001:
        jitters.append(j * base)
        j *= 10.0
    for jit in jitters:
        M = A.copy()
        if jit:
            M[np.diag_indices_from(M)] += jit
        try:
            c, low = sla.cho_factor(M, lower=True, overwrite_a=True, check_finite=False)
        except np.linalg.LinAlgError:
            continue
        return sla.cho_solve((c, low), B, check_finite=False)
    raise IllConditionedError(
        f"Cholesky failed for {what} even with jitter {_JITTER_MAX} * trace/n",
        condition_estimate=_condition_estimate(A),
    )


def gpr_predict(problem, colloc, x_star):
    """Posterior-mean prediction of f at new points.

    Computes k_star^T (K_PINN + noise)^{-1} y where the k_star columns pair
    each new point with the operator-transformed kernel against bulk points
    and the plain kernel against boundary points.
    """
    X = kernels.as_points(x_star)
    K, noise, y = _assemble(problem, colloc)
    K[np.diag_indices_from(K)] += noise
    alpha = solve_spd(K, y, what="K_PINN + noise")
    del K
    nb, nd = colloc.n_bulk, colloc.n_boundary
    blocks = []
    if nb:
        blocks.append(
            operators.kernel_block(
                problem.operator, problem.kernel, "right", X, colloc.bulk_x
            )
        )
    if nd:
        blocks.append(kernels.eval_gram(problem.kernel, X, colloc.boundary_x))
    k_star = np.hstack(blocks)
    return k_star @ alpha
