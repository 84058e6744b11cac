"""Boundary-corrected kernel, Nystrom eigenanalysis, and spectral diagnostics.

The boundary-corrected kernel Khat is the prior covariance conditioned on
zero boundary data. Diagonalizing L Khat L-adjoint under the bulk
quadrature measure yields eigenpairs through which the PDE discrepancy
L f - phi acts as a low-pass filter on the boundary-augmented source.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg as sla

from . import kernels, operators
from .errors import (
    AssemblyError,
    DomainError,
    IllConditionedError,
    ZeroSourceError,
)
from .nie import boundary_indices, kernel_gram_jittered

_SYM_TOL = 1e-8
_RETAIN_REL = 1e-12
_DEFAULT_NEG_TOL = 1e-10


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenpairs of a symmetric kernel operator under the bulk measure.

    eigvals are sorted descending and eigfuns columns are orthonormal under
    the quadrature inner product sum(w * a * b). n_retained counts modes
    with eigenvalue >= 1e-12 * lambda_1; coefficient sums use only those,
    while filters and cumulative norms use the complete basis.
    """

    eigvals: np.ndarray
    eigfuns: np.ndarray
    weights: np.ndarray
    n_retained: int
    coeffs: np.ndarray | None = None
    source_residual: float | None = None

    @property
    def n_modes(self):
        return self.eigvals.size


def _check_eta(eta_boundary):
    eta = float(eta_boundary)
    if not (math.isfinite(eta) and eta >= 0):
        raise DomainError("eta_boundary must be finite and non-negative")
    return eta


def _boundary_inverse(K_bb, wb, eta_boundary):
    """Matrix Cm with Khat = K - kb Cm kb^T; equals (K_bb + (eta W)^{-1})^{-1}.

    Realized symmetrically through S = W^{1/2} so the output is exactly
    symmetric: Cm = S (S K_bb S + eta^{-1} I)^{-1} S.
    """
    s = np.sqrt(wb)
    M = K_bb * np.outer(s, s)
    M[np.diag_indices_from(M)] += 1.0 / eta_boundary
    try:
        c, low = sla.cho_factor(M, lower=True, check_finite=False)
        Minv = sla.cho_solve((c, low), np.eye(M.shape[0]), check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise IllConditionedError(
            "boundary system could not be factorized"
        ) from exc
    return Minv * np.outer(s, s)


def compute_khat(spec, grid, eta_boundary):
    """Boundary-corrected kernel matrix on the bulk grid nodes.

    Khat = K - K(., dOmega) [K + eta^{-1}]^{-1} K(dOmega, .), with the
    boundary-measure inverse discretized on the weighted boundary nodes.
    eta_boundary = 0 returns K itself.
    """
    eta = _check_eta(eta_boundary)
    K = kernels.eval_gram(spec, grid.bulk_pts, grid.bulk_pts)
    if eta == 0:
        return K
    if grid.boundary_pts.shape[0] == 0:
        raise DomainError("eta_boundary > 0 requires boundary points")
    kb = kernels.eval_gram(spec, grid.bulk_pts, grid.boundary_pts)
    K_bb = kernels.eval_gram(spec, grid.boundary_pts, grid.boundary_pts)
    Cm = _boundary_inverse(K_bb, grid.boundary_weights, eta)
    Khat = K - kb @ Cm @ kb.T
    return 0.5 * (Khat + Khat.T)


def _khat_grid_parts(spec, grid, eta_boundary):
    """Jittered Gram, boundary node indices, and the grid-level Khat matrix."""
    Kt = kernel_gram_jittered(spec, grid.bulk_pts)
    if eta_boundary == 0:
        return Kt, None, Kt
    idx = boundary_indices(grid)
    kb = Kt[:, idx]
    K_bb = Kt[np.ix_(idx, idx)]
    Cm = _boundary_inverse(K_bb, grid.boundary_weights, eta_boundary)
    Khat = Kt - kb @ Cm @ kb.T
    return Kt, idx, 0.5 * (Khat + Khat.T)


def lkhatl_matrix(op, spec, grid, eta_boundary, realization="kernel", accuracy=4):
    """Dense matrix of [L Khat L-adjoint] on the bulk grid.

    realization='kernel' differentiates the kernel itself (analytic or FD);
    realization='grid' sandwiches the grid-level Khat between
    finite-difference operator matrices, which matches the grid NIE solver's
    discretization exactly.
    """
    eta = _check_eta(eta_boundary)
    if realization == "kernel":
        A = operators.kernel_block(op, spec, "both", grid.bulk_pts, grid.bulk_pts)
        if eta > 0:
            if grid.boundary_pts.shape[0] == 0:
                raise DomainError("eta_boundary > 0 requires boundary points")
            Lkb = operators.kernel_block(
                op, spec, "left", grid.bulk_pts, grid.boundary_pts
            )
            K_bb = kernels.eval_gram(spec, grid.boundary_pts, grid.boundary_pts)
            Cm = _boundary_inverse(K_bb, grid.boundary_weights, eta)
            A = A - Lkb @ Cm @ Lkb.T
        return A
    if realization == "grid":
        _, _, Khat = _khat_grid_parts(spec, grid, eta)
        B = operators.diff_operator_matrix(op, grid, accuracy=accuracy)
        return (B @ (B @ Khat).T).T
    raise DomainError("realization must be 'kernel' or 'grid'")


def eig_lkhatl(
    op,
    spec,
    grid,
    eta_boundary,
    realization="kernel",
    accuracy=4,
    neg_tol=_DEFAULT_NEG_TOL,
):
    """Nystrom eigendecomposition of L Khat L-adjoint under the bulk measure.

    Symmetrizes M = D^{1/2} A D^{1/2} with D = diag(quad_weights),
    eigensolves, and maps eigenvectors back to grid functions
    phi_k = D^{-1/2} v_k, orthonormal under the quadrature inner product.
    Eigenvalues are sorted descending; negatives below -neg_tol * lambda_1
    signal an assembly problem.
    """
    A = lkhatl_matrix(
        op, spec, grid, eta_boundary, realization=realization, accuracy=accuracy
    )
    scale = float(np.max(np.abs(A))) or 1.0
    asym = float(np.max(np.abs(A - A.T)))
    sym_tol = _SYM_TOL
    if realization == "kernel" and not kernels.has_analytic_derivatives(spec):
        # finite-difference kernel derivatives carry roundoff of order
        # eps^(2/(t+2)) from the 1/h^t division; a wiring bug is O(1).
        # The same roundoff perturbs eigenvalues, so the negative-eigenvalue
        # gate below gets the same floor.
        t = 2 * op.order
        fd_noise = 100.0 * float(np.finfo(float).eps) ** (2.0 / (t + 2))
        sym_tol = max(sym_tol, fd_noise)
        neg_tol = max(neg_tol, fd_noise)
    if asym > sym_tol * scale:
        raise AssemblyError(
            f"operator matrix asymmetry {asym:.3e} exceeds {sym_tol:.1e} * scale"
        )
    A = 0.5 * (A + A.T)
    sqw = np.sqrt(grid.quad_weights)
    M = A * np.outer(sqw, sqw)
    lam, V = np.linalg.eigh(M)
    lam = lam[::-1]
    V = V[:, ::-1]
    lam1 = float(lam[0])
    ref = max(lam1, 0.0)
    if ref > 0 and float(lam[-1]) < -neg_tol * ref:
        raise AssemblyError(
            f"negative eigenvalue {lam[-1]:.3e} below -neg_tol * lambda_1 "
            f"({-neg_tol * ref:.3e}); discretization too coarse or assembly bug"
        )
    n_retained = int(np.sum(lam >= _RETAIN_REL * ref)) if ref > 0 else 0
    eigfuns = V / sqw[:, None]
    return SpectralDecomposition(
        eigvals=lam,
        eigfuns=eigfuns,
        weights=grid.quad_weights.copy(),
        n_retained=n_retained,
    )


def project_coeffs(decomp, f_vals):
    """Projections c_k = sum_i w_i phi_k(x_i) f(x_i) over the full basis."""
    f = np.asarray(f_vals, dtype=float)
    if f.shape != (decomp.weights.size,):
        raise DomainError("grid function length does not match the decomposition")
    return decomp.eigfuns.T @ (decomp.weights * f)


def attach_source(decomp, phi_hat):
    """Store retained-mode coefficients of the augmented source on the decomposition.

    The part of phi_hat outside the retained span is recorded as
    source_residual (quadrature L2 norm), never silently dropped.
    """
    c_full = project_coeffs(decomp, phi_hat)
    nr = decomp.n_retained
    norm2 = float(np.dot(c_full, c_full))
    tail2 = max(norm2 - float(np.dot(c_full[:nr], c_full[:nr])), 0.0)
    return replace(
        decomp, coeffs=c_full[:nr].copy(), source_residual=math.sqrt(tail2)
    )


def augmented_source(
    problem, grid, eta_boundary, realization="kernel", accuracy=4
):
    """Boundary-augmented source phi_hat = phi - eta [L Khat](., z) g(z) dz.

    The boundary term's sign is fixed by the operator identity
    L f - phi = -eta^-1 (eta^-1 + L Khat L^T)^-1 phi_hat, so that
    discrepancy_filter(phi_hat) reproduces the residual of the integral
    equation exactly. The boundary integral is a weighted sum over the
    boundary nodes. With realization='grid' the operator and kernel are
    discretized exactly as in the grid solver.
    """
    from .gpr import eval_field

    eta = _check_eta(eta_boundary)
    phi = eval_field(problem.source, grid.bulk_pts)
    if eta == 0 or grid.boundary_pts.shape[0] == 0:
        return phi
    g = eval_field(problem.boundary, grid.boundary_pts)
    wg = grid.boundary_weights * g
    if realization == "kernel":
        Lkb = operators.kernel_block(
            problem.operator, problem.kernel, "left", grid.bulk_pts, grid.boundary_pts
        )
        K_bb = kernels.eval_gram(
            problem.kernel, grid.boundary_pts, grid.boundary_pts
        )
        Cm = _boundary_inverse(K_bb, grid.boundary_weights, eta)
        lk_hat = Lkb - (Lkb @ Cm) @ K_bb
        return phi - eta * (lk_hat @ wg)
    if realization == "grid":
        Kt, idx, _ = _khat_grid_parts(problem.kernel, grid, eta)
        kb = Kt[:, idx]
        K_bb = Kt[np.ix_(idx, idx)]
        Cm = _boundary_inverse(K_bb, grid.boundary_weights, eta)
        khat_b = kb - (kb @ Cm) @ K_bb
        B = operators.diff_operator_matrix(problem.operator, grid, accuracy=accuracy)
        return phi - eta * (B @ (khat_b @ wg))
    raise DomainError("realization must be 'kernel' or 'grid'")


def discrepancy_filter(decomp, phi_hat, eta_bulk):
    """PDE discrepancy L f - phi from the spectral low-pass filter.

    Returns -sum_k c_k / (1 + lambda_k eta) phi_k over the complete basis,
    the sign fixed by the operator identity
    L f - phi = -eta^{-1} (eta^{-1} + L Khat L-adjoint)^{-1} phi_hat.
    """
    eta = float(eta_bulk)
    if not (math.isfinite(eta) and eta >= 0):
        raise DomainError("eta_bulk must be finite and non-negative")
    c_full = project_coeffs(decomp, phi_hat)
    denom = 1.0 + decomp.eigvals * eta
    if np.any(np.abs(denom) < 1e-300):
        raise IllConditionedError("filter denominator 1 + lambda * eta vanished")
    return -(decomp.eigfuns @ (c_full / denom))


def figure_of_merit_qn(decomp, eta_bulk, phi_hat=None):
    """Overlap figure of merit Q_n = sum c_k^2/(1+lambda_k eta) / sum c_k^2.

    Uses the retained modes' coefficients, either stored by attach_source or
    projected from phi_hat on the fly.
    """
    eta = float(eta_bulk)
    if not (math.isfinite(eta) and eta >= 0):
        raise DomainError("eta_bulk must be finite and non-negative")
    if phi_hat is not None:
        c = project_coeffs(decomp, phi_hat)[: decomp.n_retained]
    elif decomp.coeffs is not None:
        c = decomp.coeffs
    else:
        raise DomainError("no source attached; pass phi_hat or use attach_source")
    total = float(np.dot(c, c))
    if total <= 0:
        raise ZeroSourceError("augmented source has zero projection")
    lam = decomp.eigvals[: c.size]
    return float(np.sum(c * c / (1.0 + lam * eta)) / total)


def cumulative_spectral(decomp, f_vals, k):
    """Cumulative spectral function A_k = sum_{j<=k} <phi_j, f>^2 / <f, f>.

    Inner products are quadrature sums; the complete basis makes A at full
    rank equal 1 by Parseval.
    """
    f = np.asarray(f_vals, dtype=float)
    c = project_coeffs(decomp, f)
    denom = float(np.dot(decomp.weights * f, f))
    if denom <= 0:
        raise ZeroSourceError("cumulative spectral function of a zero function")
    k = int(k)
    if k < 0:
        raise DomainError("k must be non-negative")
    k = min(k, c.size)
    return float(np.dot(c[:k], c[:k]) / denom)


def ak_curve(decomp, f_vals):
    """All cumulative values A_0..A_n as one array (A_0 = 0)."""
    f = np.asarray(f_vals, dtype=float)
    c = project_coeffs(decomp, f)
    denom = float(np.dot(decomp.weights * f, f))
    if denom <= 0:
        raise ZeroSourceError("cumulative spectral function of a zero function")
    out = np.empty(c.size + 1)
    out[0] = 0.0
    np.cumsum(c * c / denom, out=out[1:])
    return out
