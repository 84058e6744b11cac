"""Heat-equation benchmark with a manufactured exact solution.

u(x,t) = e^{-t - x^2/(2a)} sin(pi x) solves u_t - u_xx = phi on
[-1,1] x [0,1] with zero boundary values at x = +-1 and initial profile
u(x,0). The closed-form source phi follows by differentiating u. The
sharpness parameter a controls how much of the target lies in
low-eigenvalue kernel directions.
"""

from __future__ import annotations

import math

import numpy as np

from . import kernels, operators
from .errors import DomainError
from .gpr import ProblemData


def exact_solution(a):
    """Exact solution as a callable on space-time points (x, t)."""
    _check_a(a)

    def u(p):
        x, t = p[0], p[1]
        return math.exp(-t - x * x / (2.0 * a)) * math.sin(math.pi * x)

    return u


def heat_source(a):
    """Closed-form source phi = u_t - u_xx of the exact solution."""
    _check_a(a)

    def phi(p):
        x, t = p[0], p[1]
        envelope = math.exp(-t - x * x / (2.0 * a))
        poly = a + a * a * (math.pi**2 - 1.0) - x * x
        return (envelope / (a * a)) * (
            2.0 * a * math.pi * x * math.cos(math.pi * x) + poly * math.sin(math.pi * x)
        )

    return phi


def boundary_values(a, x_min=-1.0, x_max=1.0):
    """Boundary data: zero on the spatial sides, the initial profile at t=0."""
    _check_a(a)

    def g(p):
        x, t = p[0], p[1]
        if abs(x - x_min) <= 1e-12 or abs(x - x_max) <= 1e-12:
            return 0.0
        return math.exp(-x * x / (2.0 * a)) * math.sin(math.pi * x)

    return g


def _check_a(a):
    if not (isinstance(a, (int, float)) and math.isfinite(a) and a > 0):
        raise DomainError("sharpness parameter a must be positive and finite")


def heat_operator():
    """The operator u -> u_t - u_xx on (x, t) coordinates."""
    return operators.LinearDiffOp(terms=(((0, 1), 1.0), ((2, 0), -1.0)))


def heat_geometry(x_min=-1.0, x_max=1.0, t_max=1.0):
    return operators.SlabGeometry(x_min=x_min, x_max=x_max, t_max=t_max)


def slab_grid(nx=64, nt=32, x_min=-1.0, x_max=1.0, t_max=1.0):
    """Tensor-product grid on the slab with trapezoid quadrature.

    Boundary nodes are the two spatial sides plus the initial slice, each
    carrying its own per-segment trapezoid weights; the two corners shared
    by a side and the initial slice accumulate both contributions, so the
    boundary weights sum to the full boundary length.
    """
    if nx < 2 or nt < 2:
        raise DomainError("slab grid needs at least 2 points per axis")
    x = np.linspace(x_min, x_max, nx)
    t = np.linspace(0.0, t_max, nt)
    hx = (x_max - x_min) / (nx - 1)
    ht = t_max / (nt - 1)
    wx = np.full(nx, hx)
    wx[0] = wx[-1] = 0.5 * hx
    wt = np.full(nt, ht)
    wt[0] = wt[-1] = 0.5 * ht
    bulk = np.column_stack(
        [np.repeat(x, nt), np.tile(t, nx)]
    )
    w = np.outer(wx, wt).ravel()
    key_to_slot = {}
    bpts = []
    bw = []

    def add(px, pt, weight):
        key = (round(float(px), 12), round(float(pt), 12))
        if key in key_to_slot:
            bw[key_to_slot[key]] += weight
        else:
            key_to_slot[key] = len(bpts)
            bpts.append((px, pt))
            bw.append(weight)

    for j in range(nt):
        add(x_min, t[j], wt[j])
        add(x_max, t[j], wt[j])
    for i in range(nx):
        add(x[i], 0.0, wx[i])
    boundary_size = 2.0 * t_max + (x_max - x_min)
    return operators.DomainGrid(
        bulk_pts=bulk,
        quad_weights=w,
        boundary_pts=np.asarray(bpts),
        boundary_weights=np.asarray(bw),
        domain_size=(x_max - x_min) * t_max,
        boundary_size=boundary_size,
        axes=(x, t),
    )


def heat_problem(a, spec=None, alpha=2.0):
    """Problem data for the heat benchmark.

    The default prior is the erf arcsine kernel with both feature variances
    scaled by alpha^2 (alpha = 2 matching the benchmark configuration).
    """
    if spec is None:
        spec = kernels.scale_variances(
            kernels.KernelSpec(family="ErfArcsine", l=1.0), alpha
        )
    return ProblemData(
        source=heat_source(a),
        boundary=boundary_values(a),
        operator=heat_operator(),
        kernel=spec,
    )
