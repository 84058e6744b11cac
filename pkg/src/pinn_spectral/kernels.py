"""NNGP covariance kernels: closed forms, derivative blocks, feature samplers.

Four families are supported:

* ``CosineFeature``: K(x,y) = (sigma_a2/2) (e^{-sigma_w2 (x-y)^2/2} + e^{-sigma_w2 (x+y)^2/2}),
  the covariance of a * cos(w x) features with Gaussian a, w.
* ``SineFeature``: same with a minus sign between the two Gaussians.
* ``SquaredExponential``: sigma_a2 * e^{-sigma_w2 |x-y|^2/2} (no feature map).
* ``ErfArcsine``: the arcsine kernel of erf(w . x + b) features.

Points are scalars or 1-d coordinate arrays for a single point; point lists
are arrays of shape (n,) for 1-d inputs or (n, d) in general.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _gram
from .errors import DomainError, UnsupportedFamilyError

FAMILIES = ("CosineFeature", "SineFeature", "SquaredExponential", "ErfArcsine")

# sign of the mirror term e^{-gamma (x+y)^2/2}
_MIRROR_SIGN = {"CosineFeature": 1.0, "SineFeature": -1.0}

_ACTIVATIONS = {"CosineFeature": "cos", "SineFeature": "sin", "ErfArcsine": "erf"}


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus hyperparameters.

    ``sigma_w2`` defaults to 1/l^2. ``sigma_a2`` defaults to 1/sqrt(2 pi l^2)
    for the feature families and 1.0 otherwise. ``bias_var`` is only used by
    ErfArcsine (variance of the bias input appended to each point).
    """

    family: str
    l: float = 1.0
    sigma_a2: float | None = None
    sigma_w2: float | None = None
    bias_var: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise UnsupportedFamilyError(
                f"unknown kernel family {self.family!r}; expected one of {FAMILIES}"
            )
        if not (isinstance(self.l, (int, float)) and math.isfinite(self.l) and self.l > 0):
            raise DomainError("length scale l must be a positive finite number")
        object.__setattr__(self, "l", float(self.l))
        if self.sigma_w2 is None:
            object.__setattr__(self, "sigma_w2", 1.0 / self.l**2)
        if self.sigma_a2 is None:
            if self.family in ("CosineFeature", "SineFeature"):
                default = 1.0 / math.sqrt(2.0 * math.pi * self.l**2)
            else:
                default = 1.0
            object.__setattr__(self, "sigma_a2", default)
        for name in ("sigma_a2", "sigma_w2", "bias_var"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be a positive finite number")
            object.__setattr__(self, name, float(v))

    def to_dict(self):
        return {
            "family": self.family,
            "l": self.l,
            "sigma_a2": self.sigma_a2,
            "sigma_w2": self.sigma_w2,
            "bias_var": self.bias_var,
        }

    @classmethod
    def from_dict(cls, d):
        extra = set(d) - {"family", "l", "sigma_a2", "sigma_w2", "bias_var"}
        if extra:
            raise DomainError(f"unknown kernel keys: {sorted(extra)}")
        if "family" not in d:
            raise DomainError("kernel object requires a 'family' key")
        return cls(
            family=d["family"],
            l=d.get("l", 1.0),
            sigma_a2=d.get("sigma_a2"),
            sigma_w2=d.get("sigma_w2"),
            bias_var=d.get("bias_var", 1.0),
        )


def scale_variances(spec, alpha):
    """Scale sigma_w -> alpha sigma_w and sigma_a -> alpha sigma_a."""
    if not (math.isfinite(alpha) and alpha > 0):
        raise DomainError("alpha must be a positive finite number")
    a2 = float(alpha) ** 2
    return replace(spec, sigma_a2=spec.sigma_a2 * a2, sigma_w2=spec.sigma_w2 * a2)


@dataclass(frozen=True)
class RandomFeatureNet:
    """One random two-layer network drawn from a kernel's feature measure."""

    width: int
    weights: np.ndarray  # output layer, shape (C,)
    freqs: np.ndarray  # input layer, shape (C, d_in); erf nets carry a bias column
    activation: str  # cos | sin | erf

    def evaluate(self, pts):
        """Network output at one point or a list of points."""
        single = np.asarray(pts, dtype=float).ndim <= 1
        feats = _features(self, as_points(pts))
        vals = feats @ self.weights
        return float(vals[0]) if single and vals.size == 1 else vals

    __call__ = evaluate


def as_points(pts):
    """Normalize point input to an (n, d) float array."""
    a = np.asarray(pts, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = a[:, None]
    elif a.ndim != 2:
        raise DomainError("points must be scalars, 1-d arrays, or (n, d) arrays")
    if not np.all(np.isfinite(a)):
        raise DomainError("points contain non-finite values")
    return a


def _as_single_point(x):
    """Normalize one point (scalar or length-d coordinate array) to (1, d)."""
    a = np.asarray(x, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = a[None, :]
    else:
        raise DomainError("expected a single point")
    if not np.all(np.isfinite(a)):
        raise DomainError("points contain non-finite values")
    return a


def _gauss_deriv(r, m, gamma):
    """m-th derivative of e^{-gamma r^2/2} at r, via the Hermite recursion."""
    sg = math.sqrt(gamma)
    t = sg * r
    h_prev, h = np.ones_like(t), None
    if m >= 1:
        h = t
    for k in range(2, m + 1):
        h_prev, h = h, t * h - (k - 1) * h_prev
    hm = h_prev if m == 0 else h
    return (-sg) ** m * hm * np.exp(-0.5 * t * t)


def _erf_gram(spec, X, Y):
    s_xy = spec.sigma_w2 * (X @ Y.T) + spec.bias_var
    s_xx = spec.sigma_w2 * np.sum(X * X, axis=1) + spec.bias_var
    s_yy = spec.sigma_w2 * np.sum(Y * Y, axis=1) + spec.bias_var
    denom = np.sqrt(np.outer(1.0 + 2.0 * s_xx, 1.0 + 2.0 * s_yy))
    z = np.clip(2.0 * s_xy / denom, -1.0, 1.0)
    return spec.sigma_a2 * (2.0 / math.pi) * np.arcsin(z)


def has_analytic_derivatives(spec):
    """True when closed-form kernel derivatives are registered for the family."""
    return spec.family != "ErfArcsine"


def deriv_gram_stack(spec, pq_list, X, Y):
    """Stack of derivative blocks d^p/dx^p d^q/dy^q K over (p, q) multi-indices.

    X, Y are (n, d) and (m, d) point arrays; each entry of pq_list is a pair
    of length-d multi-indices. Returns (len(pq_list), n, m).
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.ndim != 2 or Y.ndim != 2 or X.shape[1] != Y.shape[1]:
        raise DomainError("expected (n, d) point arrays of matching dimension")
    d = X.shape[1]
    if spec.family == "ErfArcsine":
        if all(sum(p) + sum(q) == 0 for p, q in pq_list):
            K = _erf_gram(spec, X, Y)
            return np.broadcast_to(K, (len(pq_list),) + K.shape).copy()
        raise UnsupportedFamilyError(
            "ErfArcsine has no registered closed-form derivatives"
        )
    gamma = spec.sigma_w2
    if spec.family == "SquaredExponential":
        amp, s_v = spec.sigma_a2, 0.0
    else:
        amp, s_v = spec.sigma_a2 / 2.0, _MIRROR_SIGN[spec.family]
    if d == 1:
        p = np.array([p[0] for p, _ in pq_list], dtype=np.int64)
        q = np.array([q[0] for _, q in pq_list], dtype=np.int64)
        return _gram.mirror_blocks(X[:, 0], Y[:, 0], gamma, amp, s_v, p, q)
    # multi-d: both Gaussian factors are products over coordinates
    out = np.empty((len(pq_list), X.shape[0], Y.shape[0]))
    for k, (p, q) in enumerate(pq_list):
        mu = np.ones((X.shape[0], Y.shape[0]))
        mv = np.ones_like(mu) if s_v != 0.0 else None
        for i in range(d):
            m = p[i] + q[i]
            u = X[:, i][:, None] - Y[None, :, i]
            sign = -1.0 if (q[i] % 2) else 1.0
            mu *= sign * _gauss_deriv(u, m, gamma)
            if mv is not None:
                v = X[:, i][:, None] + Y[None, :, i]
                mv *= _gauss_deriv(v, m, gamma)
        out[k] = amp * (mu + s_v * mv) if mv is not None else amp * mu
    return out


def deriv_gram(spec, p, q, X, Y):
    """Single derivative block; see deriv_gram_stack."""
    return deriv_gram_stack(spec, [(tuple(p), tuple(q))], X, Y)[0]


def eval_gram(spec, pts_row, pts_col):
    """Gram matrix K(x_i, y_j) for two point lists."""
    X = as_points(pts_row)
    Y = as_points(pts_col)
    if X.shape[0] == 0 or Y.shape[0] == 0:
        raise DomainError("point lists must be non-empty")
    if X.shape[1] != Y.shape[1]:
        raise DomainError("point lists have inconsistent dimension")
    if spec.family == "ErfArcsine":
        return _erf_gram(spec, X, Y)
    d = X.shape[1]
    zero = (0,) * d
    return deriv_gram(spec, zero, zero, X, Y)


def eval_kernel(spec, x, y):
    """Closed-form covariance K(x, y) at a single pair of points."""
    X = _as_single_point(x)
    Y = _as_single_point(y)
    if X.shape[1] != Y.shape[1]:
        raise DomainError("x and y have inconsistent dimension")
    return float(eval_gram(spec, X, Y)[0, 0])


def _features(net, pts):
    """Feature matrix act(w . x) of shape (n, C)."""
    if net.activation == "erf":
        pts = np.hstack([pts, np.ones((pts.shape[0], 1))])
    z = pts @ net.freqs.T
    if net.activation == "cos":
        return np.cos(z)
    if net.activation == "sin":
        return np.sin(z)
    from scipy.special import erf

    return erf(z)


def sample_network(spec, C, seed, ndim=1):
    """Draw one random-feature network whose NNGP covariance is the kernel."""
    if spec.family == "SquaredExponential":
        raise UnsupportedFamilyError(
            "SquaredExponential has no finite feature map to sample"
        )
    if C < 1:
        raise DomainError("width C must be at least 1")
    rng = np.random.default_rng(seed)
    a = rng.normal(0.0, math.sqrt(spec.sigma_a2 / C), size=C)
    w = rng.normal(0.0, math.sqrt(spec.sigma_w2), size=(C, ndim))
    if spec.family == "ErfArcsine":
        b = rng.normal(0.0, math.sqrt(spec.bias_var), size=(C, 1))
        w = np.hstack([w, b])
    return RandomFeatureNet(
        width=C, weights=a, freqs=w, activation=_ACTIVATIONS[spec.family]
    )


def monte_carlo_kernel(spec, x, y, C, n_nets, seed):
    """Monte-Carlo estimate of K(x, y) = <f(x) f(y)> over network draws.

    Returns (estimate, std_error) where std_error is the sample standard
    error of the mean over the n_nets independent networks.
    """
    if C * n_nets < 1000:
        raise DomainError("need C * n_nets >= 1000 samples")
    if spec.family == "SquaredExponential":
        raise UnsupportedFamilyError(
            "SquaredExponential has no finite feature map to sample"
        )
    xp = _as_single_point(x)[0]
    yp = _as_single_point(y)[0]
    if xp.size != yp.size:
        raise DomainError("x and y have inconsistent dimension")
    rng = np.random.default_rng(seed)
    a = rng.normal(0.0, math.sqrt(spec.sigma_a2 / C), size=(n_nets, C))
    d = xp.size
    w = rng.normal(0.0, math.sqrt(spec.sigma_w2), size=(n_nets, C, d))
    if spec.family == "ErfArcsine":
        b = rng.normal(0.0, math.sqrt(spec.bias_var), size=(n_nets, C, 1))
        w = np.concatenate([w, b], axis=2)
        xp = np.append(xp, 1.0)
        yp = np.append(yp, 1.0)
    zx = w @ xp
    zy = w @ yp
    if spec.family == "CosineFeature":
        fx, fy = np.cos(zx), np.cos(zy)
    elif spec.family == "SineFeature":
        fx, fy = np.sin(zx), np.sin(zy)
    else:
        from scipy.special import erf

        fx, fy = erf(zx), erf(zy)
    prods = np.sum(a * fx, axis=1) * np.sum(a * fy, axis=1)
    estimate = float(np.mean(prods))
    std_error = float(np.std(prods, ddof=1) / math.sqrt(n_nets))
    return estimate, std_error
