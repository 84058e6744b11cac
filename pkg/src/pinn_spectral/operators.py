"""Linear differential operators on grids and kernels.

A LinearDiffOp is a sum of terms c(x) * d^a/dx^a with multi-index a. It can
be applied to grid functions by finite differences, realized as a sparse
matrix on a tensor-product grid, or applied analytically to a kernel's
arguments (LK, KL-adjoint, LKL-adjoint blocks).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np
import scipy.sparse as sp

from . import kernels
from .errors import CapabilityError, DomainError, GridError

_EPS = float(np.finfo(float).eps)

# total derivative order cap for the finite-difference kernel path
_FD_MAX_TOTAL = 8


@dataclass(frozen=True)
class LinearDiffOp:
    """Sum of (multi_index, coeff) terms; coeff is a constant or a function of x."""

    terms: tuple

    def __post_init__(self):
        if len(self.terms) == 0:
            raise DomainError("operator needs at least one term")
        norm = []
        d = None
        for orders, coeff in self.terms:
            orders = tuple(int(o) for o in orders)
            if any(o < 0 for o in orders):
                raise DomainError("derivative orders must be non-negative")
            if d is None:
                d = len(orders)
            elif len(orders) != d:
                raise DomainError("all terms must share the same dimension")
            if not callable(coeff):
                coeff = float(coeff)
                if not math.isfinite(coeff):
                    raise DomainError("coefficients must be finite")
            norm.append((orders, coeff))
        object.__setattr__(self, "terms", tuple(norm))

    @property
    def ndim(self):
        return len(self.terms[0][0])

    @property
    def order(self):
        """Formal order: max total derivative order over terms."""
        return max(sum(o) for o, _ in self.terms)

    def to_json_obj(self):
        out = []
        for orders, coeff in self.terms:
            if callable(coeff):
                raise CapabilityError("only constant coefficients serialize")
            out.append({"orders": list(orders), "coeff": f"const:{coeff!r}"})
        return out

    @classmethod
    def from_json_obj(cls, obj):
        terms = []
        for item in obj:
            extra = set(item) - {"orders", "coeff"}
            if extra:
                raise DomainError(f"unknown operator keys: {sorted(extra)}")
            raw = item["coeff"]
            if isinstance(raw, str):
                if not raw.startswith("const:"):
                    raise DomainError(f"unsupported coefficient {raw!r}")
                coeff = float(raw[len("const:"):])
            else:
                coeff = float(raw)
            terms.append((tuple(item["orders"]), coeff))
        return cls(terms=tuple(terms))


def identity_operator(ndim=1):
    return LinearDiffOp(terms=(((0,) * ndim, 1.0),))


@dataclass(frozen=True)
class DomainGrid:
    """Bulk quadrature grid plus a weighted boundary point set.

    quad_weights sum to the bulk volume |Omega| and boundary_weights to
    |dOmega|, so integration against the uniform measures is sum(w * f)
    divided by the respective size. axes, when present, are the 1-d
    coordinate arrays of a tensor-product grid with bulk_pts in C order.
    """

    bulk_pts: np.ndarray
    quad_weights: np.ndarray
    boundary_pts: np.ndarray
    boundary_weights: np.ndarray
    domain_size: float
    boundary_size: float
    axes: tuple | None = None

    def __post_init__(self):
        bp = np.asarray(self.bulk_pts, dtype=float)
        if bp.ndim == 1:
            bp = bp[:, None]
        qw = np.asarray(self.quad_weights, dtype=float)
        dp = np.asarray(self.boundary_pts, dtype=float)
        if dp.ndim == 1:
            dp = dp[:, None]
        dw = np.asarray(self.boundary_weights, dtype=float)
        if bp.ndim != 2 or qw.shape != (bp.shape[0],):
            raise DomainError("bulk_pts must be (n, d) with matching quad_weights")
        if dp.ndim != 2 or dw.shape != (dp.shape[0],):
            raise DomainError("boundary_pts must be (nb, d) with matching weights")
        if dp.shape[0] and dp.shape[1] != bp.shape[1]:
            raise DomainError("bulk and boundary dimensions differ")
        if not (np.all(np.isfinite(bp)) and np.all(np.isfinite(dp))):
            raise DomainError("grid points contain non-finite values")
        if np.any(qw <= 0) or np.any(dw <= 0):
            raise DomainError("quadrature weights must be positive")
        if abs(qw.sum() - self.domain_size) > 1e-12 * max(self.domain_size, 1.0):
            raise DomainError("bulk weights do not integrate 1 to |Omega|")
        if dw.size and abs(dw.sum() - self.boundary_size) > 1e-12 * max(
            self.boundary_size, 1.0
        ):
            raise DomainError("boundary weights do not integrate 1 to |dOmega|")
        if self.axes is not None:
            axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
            if int(np.prod([a.size for a in axes])) != bp.shape[0]:
                raise DomainError("axes sizes inconsistent with bulk_pts")
            if len(axes) != bp.shape[1]:
                raise DomainError("axes count inconsistent with dimension")
            object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "bulk_pts", bp)
        object.__setattr__(self, "quad_weights", qw)
        object.__setattr__(self, "boundary_pts", dp)
        object.__setattr__(self, "boundary_weights", dw)
        object.__setattr__(self, "domain_size", float(self.domain_size))
        object.__setattr__(self, "boundary_size", float(self.boundary_size))

    @property
    def shape(self):
        if self.axes is None:
            raise GridError("grid has no tensor-product axes")
        return tuple(a.size for a in self.axes)

    @property
    def n_bulk(self):
        return self.bulk_pts.shape[0]


def interval_grid(a, b, n, boundary_points=(0.0,), even_extension=False):
    """Uniform grid on [a, b] with trapezoid weights.

    With even_extension=True the grid represents an even function on
    [-b, b] by its half-line values: interior weights double and the
    declared volume is 2(b - a), which requires a = 0.
    """
    if n < 2:
        raise GridError("need at least 2 grid points")
    if not b > a:
        raise DomainError("need b > a")
    x = np.linspace(a, b, n)
    h = (b - a) / (n - 1)
    if even_extension:
        if a != 0.0:
            raise DomainError("even extension requires the interval to start at 0")
        w = np.full(n, 2.0 * h)
        w[0] = h
        w[-1] = h
        size = 2.0 * (b - a)
    else:
        w = np.full(n, h)
        w[0] = 0.5 * h
        w[-1] = 0.5 * h
        size = b - a
    bpts = np.asarray(boundary_points, dtype=float).reshape(-1, 1)
    bw = np.ones(bpts.shape[0])
    return DomainGrid(
        bulk_pts=x[:, None],
        quad_weights=w,
        boundary_pts=bpts,
        boundary_weights=bw,
        domain_size=size,
        boundary_size=float(bpts.shape[0]),
        axes=(x,),
    )


def stencil_weights(m, offsets):
    """Finite-difference weights for the m-th derivative on integer offsets.

    Solves the moment conditions sum_k w_k o_k^j = m! [j == m]; divide the
    result by h^m for a grid of spacing h.
    """
    offsets = np.asarray(offsets, dtype=float)
    p = offsets.size
    if p <= m:
        raise GridError(f"need more than {m} points for derivative order {m}")
    V = np.vander(offsets, p, increasing=True).T
    rhs = np.zeros(p)
    rhs[m] = math.factorial(m)
    return np.linalg.solve(V, rhs)


def diff_matrix_1d(x, m, accuracy=4):
    """Sparse differentiation matrix on a uniform 1-d grid.

    Central stencils of the requested accuracy in the interior, one-sided
    stencils of the same accuracy at the edges.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if m == 0:
        return sp.identity(n, format="csr")
    if accuracy < 1:
        raise DomainError("accuracy must be >= 1")
    if n < 2:
        raise GridError("need at least 2 grid points")
    h = (x[-1] - x[0]) / (n - 1)
    if h <= 0 or np.max(np.abs(np.diff(x) - h)) > 1e-9 * abs(h):
        raise GridError("grid spacing must be uniform")
    p_edge = m + accuracy
    r = (m + 1) // 2 + (accuracy + 1) // 2 - 1
    r = max(r, (m + 1) // 2)
    if n < max(2 * r + 1, p_edge):
        raise GridError(
            f"grid of {n} points too small for order-{m} stencil at accuracy {accuracy}"
        )
    rows, cols, vals = [], [], []
    w_central = stencil_weights(m, np.arange(-r, r + 1)) / h**m
    for i in range(n):
        if r <= i <= n - 1 - r:
            idx = np.arange(i - r, i + r + 1)
            w = w_central
        else:
            start = 0 if i < r else n - p_edge
            idx = np.arange(start, start + p_edge)
            w = stencil_weights(m, idx - i) / h**m
        rows.append(np.full(idx.size, i))
        cols.append(idx)
        vals.append(w)
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )
    return mat.tocsr()


def _axis_apply(mat, arr, axis):
    """Apply a sparse matrix along one axis of a dense array."""
    moved = np.moveaxis(arr, axis, 0)
    flat = moved.reshape(moved.shape[0], -1)
    out = mat @ flat
    return np.moveaxis(out.reshape(moved.shape), 0, axis)


def _coeff_values(coeff, pts):
    if callable(coeff):
        vals = np.asarray([coeff(p if p.size > 1 else p[0]) for p in pts], dtype=float)
        if not np.all(np.isfinite(vals)):
            raise DomainError("coefficient function returned non-finite values")
        return vals
    return coeff


def apply_to_function(op, f_vals, grid, accuracy=4):
    """Finite-difference application of the operator to a grid function."""
    if grid.axes is None:
        raise GridError("apply_to_function needs a tensor-product grid")
    f = np.asarray(f_vals, dtype=float)
    shape = grid.shape
    flat_in = f.ndim == 1
    if flat_in:
        if f.size != grid.n_bulk:
            raise DomainError("grid function length does not match the grid")
        f = f.reshape(shape)
    elif f.shape != shape:
        raise DomainError("grid function shape does not match the grid")
    if op.ndim != len(shape):
        raise DomainError("operator dimension does not match the grid")
    mats = {}
    out = np.zeros(shape)
    for orders, coeff in op.terms:
        term = f
        for axis, mj in enumerate(orders):
            if mj == 0:
                continue
            key = (axis, mj)
            if key not in mats:
                mats[key] = diff_matrix_1d(grid.axes[axis], mj, accuracy)
            term = _axis_apply(mats[key], term, axis)
        c = _coeff_values(coeff, grid.bulk_pts)
        if isinstance(c, np.ndarray):
            c = c.reshape(shape)
        out = out + c * term
    return out.ravel() if flat_in else out


def diff_operator_matrix(op, grid, accuracy=4):
    """Sparse matrix realizing the operator on the flattened bulk grid."""
    if grid.axes is None:
        raise GridError("diff_operator_matrix needs a tensor-product grid")
    shape = grid.shape
    if op.ndim != len(shape):
        raise DomainError("operator dimension does not match the grid")
    total = None
    for orders, coeff in op.terms:
        mat = sp.identity(1, format="csr")
        for axis, mj in enumerate(orders):
            ax_mat = (
                sp.identity(shape[axis], format="csr")
                if mj == 0
                else diff_matrix_1d(grid.axes[axis], mj, accuracy)
            )
            mat = sp.kron(mat, ax_mat, format="csr")
        c = _coeff_values(coeff, grid.bulk_pts)
        term = sp.diags(c) @ mat if isinstance(c, np.ndarray) else c * mat
        total = term if total is None else total + term
    return total.tocsr()


def _const_terms(op, d):
    terms = []
    for orders, coeff in op.terms:
        if callable(coeff):
            raise CapabilityError("kernel blocks require constant coefficients")
        if len(orders) != d:
            raise DomainError("operator dimension does not match the points")
        terms.append((orders, coeff))
    return terms


def _fd_stencil(m):
    """Central product-stencil factor for one slot: (offsets, weights), zeros dropped."""
    r = (m + 1) // 2
    off = np.arange(-r, r + 1)
    w = stencil_weights(m, off)
    keep = np.abs(w) > 0
    return off[keep], w[keep]


def _fd_pq_gram(spec, p, q, X, Y):
    """Mixed kernel derivative d^p_x d^q_y K by one product stencil.

    All slots share a single step h tuned to the total order, so the
    truncation and roundoff errors balance without noise amplification
    from nested differencing.
    """
    total = sum(p) + sum(q)
    if total == 0:
        return kernels.eval_gram(spec, X, Y)
    if total > _FD_MAX_TOTAL:
        raise CapabilityError(
            f"finite-difference kernel derivatives capped at total order {_FD_MAX_TOTAL}"
        )
    h = _EPS ** (1.0 / (total + 2)) * spec.l
    x_slots = [(dim, m) for dim, m in enumerate(p) if m > 0]
    y_slots = [(dim, m) for dim, m in enumerate(q) if m > 0]
    x_sten = [_fd_stencil(m) for _, m in x_slots]
    y_sten = [_fd_stencil(m) for _, m in y_slots]

    def shifted(base, slots, stencils):
        out = []
        for combo in product(*[range(o.size) for o, _ in stencils]):
            pts = base.copy()
            w = 1.0
            for (dim, _), (off, wt), k in zip(slots, stencils, combo):
                pts[:, dim] += off[k] * h
                w *= wt[k]
            out.append((pts, w))
        return out

    acc = np.zeros((X.shape[0], Y.shape[0]))
    for Xs, wx in shifted(X, x_slots, x_sten):
        for Ys, wy in shifted(Y, y_slots, y_sten):
            acc += (wx * wy) * kernels.eval_gram(spec, Xs, Ys)
    return acc / h**total


def kernel_block(op, spec, side, X, Y):
    """Gram block of the kernel with the operator applied to one or both arguments.

    side='left' gives [LK](x_i, y_j), side='right' gives [K L-adjoint]
    (operator on the second argument), side='both' gives [L K L-adjoint].
    """
    X = kernels.as_points(X)
    Y = kernels.as_points(Y)
    if X.shape[1] != Y.shape[1]:
        raise DomainError("point lists have inconsistent dimension")
    d = X.shape[1]
    zero = (0,) * d
    terms = _const_terms(op, d)
    if side == "left":
        pairs = [(o, zero, c) for o, c in terms]
    elif side == "right":
        pairs = [(zero, o, c) for o, c in terms]
    elif side == "both":
        pairs = [(o1, o2, c1 * c2) for o1, c1 in terms for o2, c2 in terms]
    else:
        raise DomainError("side must be left, right, or both")
    pq = [(p, q) for p, q, _ in pairs]
    coeffs = np.array([c for _, _, c in pairs])
    if kernels.has_analytic_derivatives(spec):
        stack = kernels.deriv_gram_stack(spec, pq, X, Y)
    else:
        stack = np.stack([_fd_pq_gram(spec, p, q, X, Y) for p, q in pq])
    return np.tensordot(coeffs, stack, axes=1)


def apply_to_kernel(op, spec, side, x, y):
    """Pointwise kernel derivative combination; see kernel_block."""
    X = kernels._as_single_point(x)
    Y = kernels._as_single_point(y)
    return float(kernel_block(op, spec, side, X, Y)[0, 0])


@dataclass(frozen=True)
class IntervalGeometry:
    """Interval bulk with a finite boundary point set."""

    a: float
    b: float
    boundary: tuple = (0.0,)

    def __post_init__(self):
        if not self.b > self.a:
            raise DomainError("need b > a")
        if len(self.boundary) == 0:
            raise DomainError("geometry has an empty boundary set")

    def sample_bulk(self, n, rng):
        return rng.uniform(self.a, self.b, size=(n, 1))

    def sample_boundary(self, n, rng):
        pts = np.asarray(self.boundary, dtype=float)
        return pts[rng.integers(0, pts.size, size=n)][:, None]


@dataclass(frozen=True)
class SlabGeometry:
    """Space-time slab [x_min, x_max] x [0, t_max].

    The boundary is the two spatial sides plus the initial slice t=0;
    boundary samples land on a segment with probability proportional to
    its length.
    """

    x_min: float = -1.0
    x_max: float = 1.0
    t_max: float = 1.0

    def __post_init__(self):
        if not (self.x_max > self.x_min and self.t_max > 0):
            raise DomainError("slab needs x_max > x_min and t_max > 0")

    def sample_bulk(self, n, rng):
        x = rng.uniform(self.x_min, self.x_max, size=n)
        t = rng.uniform(0.0, self.t_max, size=n)
        return np.column_stack([x, t])

    def sample_boundary(self, n, rng):
        lengths = np.array([self.t_max, self.t_max, self.x_max - self.x_min])
        probs = lengths / lengths.sum()
        seg = rng.choice(3, size=n, p=probs)
        out = np.empty((n, 2))
        for k in range(n):
            if seg[k] == 0:
                out[k] = (self.x_min, rng.uniform(0.0, self.t_max))
            elif seg[k] == 1:
                out[k] = (self.x_max, rng.uniform(0.0, self.t_max))
            else:
                out[k] = (rng.uniform(self.x_min, self.x_max), 0.0)
        return out
