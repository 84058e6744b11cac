"""Neurally-informed equation solvers and the first-order effective action.

The half-line toy problem (first-order operator, boundary value at 0,
mirror-symmetric cosine kernel) has a closed-form solution through a
Green's function computed by quadrature. General linear problems are
solved on a grid by discretizing the integro-differential equation with
quadrature weights and finite differences.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from . import kernels, operators
from .errors import DomainError, GridError, QuadratureError, SingularSystemError

_QUAD_REL_TOL = 1e-8
_QUAD_MAX_DOUBLINGS = 6
_KERNEL_JITTER = 1e-12


@dataclass(frozen=True)
class ToyConfig:
    """Parameters of the half-line toy problem f' = 0, f(0) = g0."""

    l: float = 1.0
    g0: float = 2.5
    eta_bulk: float = 1024.0
    eta_boundary: float = 8192.0
    x_max: float = 512.0
    k_max: float | None = None
    n_k: int = 20001

    def __post_init__(self):
        for name in ("l", "eta_bulk", "eta_boundary", "x_max"):
            v = float(getattr(self, name))
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be positive and finite")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "g0", float(self.g0))
        if self.k_max is None:
            object.__setattr__(self, "k_max", max(12.0 / self.l, 20.0 * self.kappa))
        k_max = float(self.k_max)
        if not (math.isfinite(k_max) and k_max * self.l >= 12.0):
            raise DomainError("k_max * l must be >= 12 to cover the integrand tail")
        object.__setattr__(self, "k_max", k_max)
        if int(self.n_k) < 3:
            raise DomainError("n_k must be at least 3")
        object.__setattr__(self, "n_k", int(self.n_k))

    @property
    def kappa(self):
        """Pole location of the momentum-space propagator."""
        return 1.0 / math.sqrt(self.l**2 / 2.0 + self.eta_bulk)

    def kernel_spec(self):
        return kernels.KernelSpec(family="CosineFeature", l=self.l)


def _greens_integrand(k, cfg, xs, xps):
    """Integrand values, shape (n_k, n_pairs); overflow of the Gaussian is benign."""
    with np.errstate(over="ignore"):
        denom = np.exp(0.5 * (k * cfg.l) ** 2) + cfg.eta_bulk * k * k
        num = np.cos(np.outer(k, xs)) * np.cos(np.outer(k, xps))
        return num / denom[:, None]


def greens_batch(cfg, xs, xps):
    """Green's function of the toy bulk operator at paired abscissas.

    Dense symmetric trapezoid rule over [-k_max, k_max], doubling the
    resolution (reusing previous nodes) until every value changes by less
    than 1e-8 relative.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    xps = np.atleast_1d(np.asarray(xps, dtype=float))
    if xs.shape != xps.shape:
        raise DomainError("x and x' lists must have matching shapes")
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(xps))):
        raise DomainError("abscissas must be finite")
    if xs.size == 0:
        return np.empty(0)
    out = np.empty(xs.size)
    chunk = 256
    for lo in range(0, xs.size, chunk):
        out[lo : lo + chunk] = _greens_chunk(cfg, xs[lo : lo + chunk], xps[lo : lo + chunk])
    return out


def _greens_chunk(cfg, xs, xps):
    a, b = -cfg.k_max, cfg.k_max
    n = cfg.n_k
    k = np.linspace(a, b, n)
    h = (b - a) / (n - 1)
    vals = _greens_integrand(k, cfg, xs, xps)
    total = h * (vals.sum(axis=0) - 0.5 * (vals[0] + vals[-1]))
    for _ in range(_QUAD_MAX_DOUBLINGS):
        mids = 0.5 * (k[:-1] + k[1:])
        h *= 0.5
        refined = 0.5 * total + h * _greens_integrand(mids, cfg, xs, xps).sum(axis=0)
        scale = np.maximum(np.abs(refined), 1e-300)
        done = np.all(np.abs(refined - total) <= _QUAD_REL_TOL * scale)
        total = refined
        if done:
            return total / math.pi
        k = np.sort(np.concatenate([k, mids]))
    raise QuadratureError(
        "Green's function quadrature did not converge after "
        f"{_QUAD_MAX_DOUBLINGS} refinements"
    )


def greens_function_toy(cfg, x, xp):
    """G(x, x') = (1/pi) Int dk cos(kx)cos(kx') / (e^{(kl)^2/2} + eta k^2)."""
    return float(greens_batch(cfg, [x], [xp])[0])


def greens_single_pole(cfg, x, xp):
    """Single-pole closed form (kappa/2)(e^{-k|x-x'|} + e^{-k|x+x'|})."""
    kappa = cfg.kappa
    if kappa * cfg.l > 0.3:
        warnings.warn(
            "single-pole approximation degrades for kappa * l > 0.3",
            stacklevel=2,
        )
    x, xp = float(x), float(xp)
    return 0.5 * kappa * (math.exp(-kappa * abs(x - xp)) + math.exp(-kappa * abs(x + xp)))


def toy_predict(cfg, x_star):
    """Closed-form toy prediction: f(x) = Delta * G(x, 0).

    Delta = eta_boundary * g0 / (1 + G(0,0) * eta_boundary). Returns
    (f_vals, Delta).
    """
    x_star = np.atleast_1d(np.asarray(x_star, dtype=float))
    if np.any(x_star < 0):
        raise DomainError("toy prediction is defined for x >= 0")
    g00 = greens_function_toy(cfg, 0.0, 0.0)
    delta = cfg.eta_boundary * cfg.g0 / (1.0 + g00 * cfg.eta_boundary)
    f_vals = delta * greens_batch(cfg, x_star, np.zeros_like(x_star))
    return f_vals, float(delta)


@dataclass(frozen=True)
class NieSolution:
    """Grid solution of the neurally-informed equation."""

    grid: operators.DomainGrid
    f0_vals: np.ndarray
    delta: float | None
    residual_norm: float


def boundary_indices(grid, tol=1e-9):
    """Indices of bulk nodes coinciding with each boundary point."""
    idx = np.empty(grid.boundary_pts.shape[0], dtype=int)
    for i, z in enumerate(grid.boundary_pts):
        dists = np.max(np.abs(grid.bulk_pts - z), axis=1)
        j = int(np.argmin(dists))
        if dists[j] > tol:
            raise GridError(
                f"boundary point {z} does not coincide with any bulk grid node"
            )
        idx[i] = j
    return idx


def kernel_gram_jittered(spec, pts):
    """Bulk Gram matrix with the fixed stabilizing jitter 1e-12 * trace/n."""
    K = kernels.eval_gram(spec, pts, pts)
    jit = _KERNEL_JITTER * np.trace(K) / K.shape[0]
    K[np.diag_indices_from(K)] += jit
    return K


def nie_solve_grid(problem, grid, eta_bulk, eta_boundary, accuracy=4):
    """Solve the discretized neurally-informed equation on a grid.

    The continuum equation f + eta_bulk * Int (Lf - phi)[LK](., x) +
    eta_boundary * Sum (f - g) K(., x) = 0 becomes
    (I + eta_bulk K B^T D B + eta_boundary K P^T W P) f = rhs with D, W the
    quadrature weights and B the finite-difference operator matrix.
    """
    if eta_bulk < 0 or eta_boundary < 0:
        raise DomainError("eta values must be non-negative")
    n = grid.n_bulk
    phi = np.asarray(
        [0.0] * n
        if problem.source is None
        else _field(problem.source, grid.bulk_pts)
    )
    f = np.zeros(n)
    if eta_bulk == 0 and eta_boundary == 0:
        return NieSolution(grid=grid, f0_vals=f, delta=None, residual_norm=0.0)
    B = operators.diff_operator_matrix(problem.operator, grid, accuracy=accuracy)
    Kt = kernel_gram_jittered(problem.kernel, grid.bulk_pts)
    w = grid.quad_weights
    A = np.eye(n)
    rhs = np.zeros(n)
    if eta_bulk > 0:
        KBt = (B @ Kt).T
        DB = sp.diags(w) @ B
        A += eta_bulk * (DB.T @ KBt.T).T
        rhs += eta_bulk * (KBt @ (w * phi))
    if eta_boundary > 0:
        idx = boundary_indices(grid)
        g = _field(problem.boundary, grid.boundary_pts)
        Z = Kt[:, idx] * grid.boundary_weights
        A[:, idx] += eta_boundary * Z
        rhs += eta_boundary * (Z @ g)
    try:
        lu, piv = sla.lu_factor(A, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError("grid NIE system is singular") from exc
    f = sla.lu_solve((lu, piv), rhs, check_finite=False)
    if not np.all(np.isfinite(f)):
        raise SingularSystemError("grid NIE solve produced non-finite values")
    residual = float(np.max(np.abs(A @ f - rhs)))
    return NieSolution(grid=grid, f0_vals=f, delta=None, residual_norm=residual)


def _field(fn, pts):
    from .gpr import eval_field

    return eval_field(fn, pts)


def effective_action(
    problem,
    grid,
    n_bulk_eff,
    n_boundary_eff,
    sigma2_bulk,
    sigma2_boundary,
    f_vals,
    accuracy=4,
):
    """First-order effective action of a candidate grid function.

    S[f] = (eta_bulk/2) Int (Lf - phi)^2 + (eta_boundary/2) Sum_b (f - g)^2
    + (1/2) f^T K^{-1} f with eta = count / sigma^2. Uses the same operator
    matrix and jittered kernel matrix as the grid NIE solver, so the NIE
    solution is the exact stationary point of this functional.
    """
    f = np.asarray(f_vals, dtype=float)
    if f.shape != (grid.n_bulk,):
        raise DomainError("f_vals must be a bulk grid function")
    if not np.all(np.isfinite(f)):
        raise DomainError("f_vals contain non-finite values")
    if sigma2_bulk <= 0 or sigma2_boundary <= 0:
        raise DomainError("noise variances must be positive")
    eta_bulk = n_bulk_eff / sigma2_bulk
    eta_boundary = n_boundary_eff / sigma2_boundary
    total = 0.0
    if eta_bulk > 0:
        phi = _field(problem.source, grid.bulk_pts)
        B = operators.diff_operator_matrix(problem.operator, grid, accuracy=accuracy)
        r = B @ f - phi
        total += 0.5 * eta_bulk * float(np.dot(grid.quad_weights * r, r))
    if eta_boundary > 0:
        idx = boundary_indices(grid)
        g = _field(problem.boundary, grid.boundary_pts)
        rb = f[idx] - g
        total += 0.5 * eta_boundary * float(np.dot(grid.boundary_weights * rb, rb))
    Kt = kernel_gram_jittered(problem.kernel, grid.bulk_pts)
    try:
        c, low = sla.cho_factor(Kt, lower=True, check_finite=False)
        Kinv_f = sla.cho_solve((c, low), f, check_finite=False)
    except np.linalg.LinAlgError:
        lu, piv = sla.lu_factor(Kt, check_finite=False)
        Kinv_f = sla.lu_solve((lu, piv), f, check_finite=False)
    total += 0.5 * float(np.dot(f, Kinv_f))
    return total
