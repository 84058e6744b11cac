"""Kernel closed forms, derivatives, and feature-map samplers.

Closed forms are checked against independent reimplementations of the
covariance formulas, derivatives against finite differences of the scalar
kernel, and both against the Monte-Carlo sampler.
"""
import math

import numpy as np
import pytest

from pinn_spectral import KernelSpec
from pinn_spectral.errors import DomainError, UnsupportedFamilyError
from pinn_spectral.kernels import (
    deriv_gram,
    eval_gram,
    eval_kernel,
    has_analytic_derivatives,
    monte_carlo_kernel,
    sample_network,
    scale_variances,
)

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def mirror_oracle(x, y, sa2, sw2, sign):
    """Direct evaluation of the two-Gaussian covariance, scalar arguments."""
    plus = math.exp(-0.5 * sw2 * (x - y) ** 2)
    minus = math.exp(-0.5 * sw2 * (x + y) ** 2)
    return 0.5 * sa2 * (plus + sign * minus)


def se_oracle(x, y, sa2, sw2):
    return sa2 * math.exp(-0.5 * sw2 * (x - y) ** 2)


def erf_oracle(x, y, sa2, sw2, bias):
    """Arcsine covariance of an erf feature map with a bias input."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    sxy = sw2 * float(x @ y) + bias
    sxx = sw2 * float(x @ x) + bias
    syy = sw2 * float(y @ y) + bias
    z = 2.0 * sxy / math.sqrt((1.0 + 2.0 * sxx) * (1.0 + 2.0 * syy))
    return sa2 * (2.0 / math.pi) * math.asin(max(-1.0, min(1.0, z)))


def fd_mixed_deriv(spec, p, q, x, y):
    """Central-difference d^p_x d^q_y K for scalar x, y (oracle).

    Step balances h^2 truncation against eps/h^total roundoff.
    """
    total = p + q
    h = float(np.finfo(float).eps) ** (1.0 / (total + 2))
    acc = 0.0
    from pinn_spectral.operators import stencil_weights

    rx = (p + 1) // 2
    ry = (q + 1) // 2
    offx = np.arange(-rx, rx + 1)
    offy = np.arange(-ry, ry + 1)
    wx = stencil_weights(p, offx) if p else np.array([1.0])
    wy = stencil_weights(q, offy) if q else np.array([1.0])
    if not p:
        offx = np.array([0])
    if not q:
        offy = np.array([0])
    for i, oi in enumerate(offx):
        for j, oj in enumerate(offy):
            acc += wx[i] * wy[j] * eval_kernel(spec, x + oi * h, y + oj * h)
    return acc / h**total


class TestClosedForms:
    def test_cosine_origin_value(self):
        spec = KernelSpec(family="CosineFeature", l=1.0)
        assert eval_kernel(spec, 0.0, 0.0) == pytest.approx(INV_SQRT_2PI, rel=1e-15)
        assert eval_kernel(spec, 0.0, 0.0) == pytest.approx(0.3989422804014327)

    def test_cosine_unit_separation(self):
        spec = KernelSpec(family="CosineFeature", l=1.0)
        expect = math.exp(-0.5) * INV_SQRT_2PI
        assert eval_kernel(spec, 0.0, 1.0) == pytest.approx(expect, rel=1e-15)
        assert eval_kernel(spec, 0.0, 1.0) == pytest.approx(0.24197072451914337)
        assert eval_kernel(spec, 0.0, 1.0) == eval_kernel(spec, 1.0, 0.0)

    def test_sine_vanishes_at_origin_line(self):
        spec = KernelSpec(family="SineFeature", l=1.0)
        for x in (0.0, 0.3, 1.7, 25.0):
            assert eval_kernel(spec, 0.0, x) == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("family,sign", [("CosineFeature", 1.0), ("SineFeature", -1.0)])
    def test_mirror_families_match_oracle(self, family, sign, rng):
        spec = KernelSpec(family=family, l=0.7)
        for _ in range(20):
            x, y = rng.uniform(-3, 3, size=2)
            expect = mirror_oracle(x, y, spec.sigma_a2, spec.sigma_w2, sign)
            assert eval_kernel(spec, x, y) == pytest.approx(expect, rel=1e-13, abs=1e-15)

    def test_squared_exponential_matches_oracle(self, rng):
        spec = KernelSpec(family="SquaredExponential", l=1.3)
        for _ in range(20):
            x, y = rng.uniform(-3, 3, size=2)
            expect = se_oracle(x, y, spec.sigma_a2, spec.sigma_w2)
            assert eval_kernel(spec, x, y) == pytest.approx(expect, rel=1e-13)

    def test_erf_matches_oracle_1d_and_2d(self, rng):
        spec = KernelSpec(family="ErfArcsine", l=1.0, bias_var=0.5)
        for _ in range(10):
            x, y = rng.uniform(-2, 2, size=2)
            expect = erf_oracle(x, y, spec.sigma_a2, spec.sigma_w2, spec.bias_var)
            assert eval_kernel(spec, x, y) == pytest.approx(expect, rel=1e-13)
        for _ in range(10):
            x = rng.uniform(-2, 2, size=2)
            y = rng.uniform(-2, 2, size=2)
            expect = erf_oracle(x, y, spec.sigma_a2, spec.sigma_w2, spec.bias_var)
            assert eval_kernel(spec, x, y) == pytest.approx(expect, rel=1e-13)

    def test_erf_arcsine_argument_saturation_is_finite(self):
        # same point with large weights drives the arcsine argument to 1
        spec = KernelSpec(family="ErfArcsine", l=1e-3)
        v = eval_kernel(spec, 5.0, 5.0)
        assert math.isfinite(v)
        assert v <= spec.sigma_a2 + 1e-12

    def test_mirror_point_reflection_symmetry(self, rng):
        # K depends on (x-y)^2 and (x+y)^2 only, so K(x,y) = K(-x,-y)
        for family in ("CosineFeature", "SineFeature"):
            spec = KernelSpec(family=family, l=1.0)
            for _ in range(10):
                x, y = rng.uniform(-3, 3, size=2)
                assert eval_kernel(spec, x, y) == pytest.approx(
                    eval_kernel(spec, -x, -y), rel=1e-14, abs=1e-16
                )

    def test_sine_odd_under_single_reflection(self, rng):
        spec = KernelSpec(family="SineFeature", l=1.0)
        for _ in range(10):
            x, y = rng.uniform(-3, 3, size=2)
            assert eval_kernel(spec, -x, y) == pytest.approx(
                -eval_kernel(spec, x, y), rel=1e-13, abs=1e-16
            )

    def test_non_finite_input_rejected(self):
        spec = KernelSpec(family="CosineFeature")
        with pytest.raises(DomainError):
            eval_kernel(spec, float("nan"), 0.0)
        with pytest.raises(DomainError):
            eval_kernel(spec, 0.0, float("inf"))


class TestSpecDefaults:
    def test_feature_family_defaults(self):
        for family in ("CosineFeature", "SineFeature"):
            for l in (1.0, 2.0, 0.5):
                spec = KernelSpec(family=family, l=l)
                assert spec.sigma_w2 == pytest.approx(1.0 / l**2)
                assert spec.sigma_a2 == pytest.approx(1.0 / math.sqrt(2 * math.pi * l**2))

    def test_squared_exponential_defaults(self):
        spec = KernelSpec(family="SquaredExponential", l=2.0)
        assert spec.sigma_a2 == 1.0
        assert spec.sigma_w2 == pytest.approx(0.25)

    def test_explicit_values_win(self):
        spec = KernelSpec(family="CosineFeature", l=1.0, sigma_a2=3.0, sigma_w2=0.1)
        assert spec.sigma_a2 == 3.0
        assert spec.sigma_w2 == 0.1

    def test_unknown_family_rejected(self):
        with pytest.raises(UnsupportedFamilyError):
            KernelSpec(family="Matern32")

    def test_bad_hyperparameters_rejected(self):
        with pytest.raises(DomainError):
            KernelSpec(family="CosineFeature", l=-1.0)
        with pytest.raises(DomainError):
            KernelSpec(family="CosineFeature", sigma_a2=0.0)
        with pytest.raises(DomainError):
            KernelSpec(family="ErfArcsine", bias_var=float("inf"))

    def test_dict_round_trip(self):
        spec = KernelSpec(family="ErfArcsine", l=1.5, bias_var=0.25)
        again = KernelSpec.from_dict(spec.to_dict())
        assert again == spec

    def test_from_dict_rejects_unknown_keys(self):
        with pytest.raises(DomainError):
            KernelSpec.from_dict({"family": "CosineFeature", "lengthscale": 2.0})
        with pytest.raises(DomainError):
            KernelSpec.from_dict({"l": 2.0})

    def test_scale_variances(self):
        spec = KernelSpec(family="ErfArcsine", l=1.0, bias_var=0.5)
        scaled = scale_variances(spec, 2.0)
        assert scaled.sigma_a2 == pytest.approx(4 * spec.sigma_a2)
        assert scaled.sigma_w2 == pytest.approx(4 * spec.sigma_w2)
        assert scaled.bias_var == spec.bias_var
        assert scaled.l == spec.l
        with pytest.raises(DomainError):
            scale_variances(spec, 0.0)


class TestGram:
    def test_single_point_gram(self):
        spec = KernelSpec(family="CosineFeature", l=1.0)
        G = eval_gram(spec, [0.0], [0.0])
        assert G.shape == (1, 1)
        assert G[0, 0] == pytest.approx(INV_SQRT_2PI)

    def test_rectangular_block_is_elementwise(self):
        spec = KernelSpec(family="CosineFeature", l=1.0)
        G = eval_gram(spec, [0.0, 1.0], [2.0])
        assert G.shape == (2, 1)
        assert G[0, 0] == pytest.approx(eval_kernel(spec, 0.0, 2.0))
        assert G[1, 0] == pytest.approx(eval_kernel(spec, 1.0, 2.0))

    @pytest.mark.parametrize(
        "family", ["CosineFeature", "SineFeature", "SquaredExponential", "ErfArcsine"]
    )
    def test_gram_psd(self, family, rng):
        spec = KernelSpec(family=family, l=1.0)
        for _ in range(10):
            pts = rng.uniform(-3, 3, size=rng.integers(2, 20))
            G = eval_gram(spec, pts, pts)
            np.testing.assert_allclose(G, G.T, atol=1e-14)
            ev = np.linalg.eigvalsh(G)
            assert ev.min() >= -1e-10 * np.trace(G)


class TestDerivatives:
    CASES = [(1, 0), (0, 1), (1, 1), (2, 0), (0, 2), (2, 2)]

    @pytest.mark.parametrize("family", ["CosineFeature", "SineFeature", "SquaredExponential"])
    @pytest.mark.parametrize("p,q", CASES)
    def test_analytic_matches_finite_difference(self, family, p, q, rng):
        spec = KernelSpec(family=family, l=1.0)
        assert has_analytic_derivatives(spec)
        X = rng.uniform(-2, 2, size=4)
        Y = rng.uniform(-2, 2, size=4)
        got = deriv_gram(spec, (p,), (q,), X[:, None], Y[:, None])
        # FD accuracy degrades as eps^(2/(total+2)); widen tolerance with order
        tol = 50.0 * float(np.finfo(float).eps) ** (2.0 / (p + q + 2))
        for i, x in enumerate(X):
            for j, y in enumerate(Y):
                fd = fd_mixed_deriv(spec, p, q, x, y)
                assert got[i, j] == pytest.approx(fd, rel=tol, abs=tol)

    def test_2d_product_derivative(self, rng):
        # d/dx0 d/dy1 of the 2-d squared exponential, against nested FD
        spec = KernelSpec(family="SquaredExponential", l=1.0)
        x = rng.uniform(-1, 1, size=2)
        y = rng.uniform(-1, 1, size=2)
        got = deriv_gram(spec, (1, 0), (0, 1), x[None, :], y[None, :])[0, 0]
        h = 1e-5
        acc = 0.0
        for sx in (-1, 1):
            for sy in (-1, 1):
                xs = x + np.array([sx * h, 0.0])
                ys = y + np.array([0.0, sy * h])
                acc += sx * sy * eval_kernel(spec, xs, ys)
        fd = acc / (4 * h * h)
        assert got == pytest.approx(fd, rel=1e-5, abs=1e-8)

    def test_first_derivative_vanishes_at_even_point(self):
        # K(x, 0) for the cosine family is even in x, so d/dx at 0 is 0
        spec = KernelSpec(family="CosineFeature", l=1.0)
        got = deriv_gram(spec, (1,), (0,), np.array([[0.0]]), np.array([[0.0]]))
        assert got[0, 0] == pytest.approx(0.0, abs=1e-15)

    def test_erf_has_no_analytic_derivatives(self):
        spec = KernelSpec(family="ErfArcsine")
        assert not has_analytic_derivatives(spec)
        with pytest.raises(UnsupportedFamilyError):
            deriv_gram(spec, (1,), (0,), np.array([[0.0]]), np.array([[1.0]]))

    def test_lkl_gram_exactly_symmetric(self, rng):
        # derivative Gram with p=q on identical point sets transposes bitwise
        spec = KernelSpec(family="CosineFeature", l=1.0)
        X = rng.uniform(-2, 2, size=12)[:, None]
        M = deriv_gram(spec, (1,), (1,), X, X)
        assert np.array_equal(M, M.T)


class TestSampleNetwork:
    def test_width_one_matches_hand_computation(self):
        spec = KernelSpec(family="CosineFeature", l=1.0)
        net = sample_network(spec, C=1, seed=7)
        a = net.weights[0]
        w = net.freqs[0, 0]
        for x in (0.0, 0.4, 2.0):
            assert net.evaluate(x) == pytest.approx(a * math.cos(w * x), rel=1e-14)

    def test_sine_activation(self):
        spec = KernelSpec(family="SineFeature", l=1.0)
        net = sample_network(spec, C=1, seed=7)
        a = net.weights[0]
        w = net.freqs[0, 0]
        assert net.evaluate(0.9) == pytest.approx(a * math.sin(w * 0.9), rel=1e-14)

    def test_same_seed_bit_identical(self):
        spec = KernelSpec(family="ErfArcsine", l=1.0)
        n1 = sample_network(spec, C=64, seed=11)
        n2 = sample_network(spec, C=64, seed=11)
        assert np.array_equal(n1.weights, n2.weights)
        assert np.array_equal(n1.freqs, n2.freqs)

    def test_erf_net_carries_bias_column(self):
        spec = KernelSpec(family="ErfArcsine", l=1.0, bias_var=0.5)
        net = sample_network(spec, C=8, seed=3, ndim=2)
        assert net.freqs.shape == (8, 3)

    def test_squared_exponential_unsupported(self):
        spec = KernelSpec(family="SquaredExponential")
        with pytest.raises(UnsupportedFamilyError):
            sample_network(spec, C=4, seed=0)

    def test_output_variance_matches_kernel(self):
        # Var f(0) over independent nets estimates K(0,0)
        spec = KernelSpec(family="CosineFeature", l=1.0)
        n_nets = 4000
        vals = np.empty(n_nets)
        for i in range(n_nets):
            vals[i] = sample_network(spec, C=25, seed=500 + i).evaluate(0.0)
        k00 = eval_kernel(spec, 0.0, 0.0)
        var = np.var(vals, ddof=1)
        se = k00 * math.sqrt(2.0 / (n_nets - 1))
        assert abs(var - k00) <= 3 * se


class TestMonteCarlo:
    def test_sample_budget_precondition(self):
        spec = KernelSpec(family="CosineFeature")
        with pytest.raises(DomainError):
            monte_carlo_kernel(spec, 0.0, 0.0, C=10, n_nets=10, seed=0)

    def test_cosine_origin_within_three_se(self):
        spec = KernelSpec(family="CosineFeature", l=1.0)
        est, se = monte_carlo_kernel(spec, 0.0, 0.0, C=100, n_nets=10000, seed=2)
        assert abs(est - INV_SQRT_2PI) <= 3 * se

    def test_sine_zero_covariance_within_three_se(self):
        spec = KernelSpec(family="SineFeature", l=1.0)
        est, se = monte_carlo_kernel(spec, 0.0, 1.0, C=100, n_nets=10000, seed=2)
        assert abs(est) <= 3 * se

    def test_argument_order_irrelevant_under_same_seed(self):
        spec = KernelSpec(family="ErfArcsine", l=1.0)
        e1, s1 = monte_carlo_kernel(spec, 0.3, 1.1, C=50, n_nets=100, seed=5)
        e2, s2 = monte_carlo_kernel(spec, 1.1, 0.3, C=50, n_nets=100, seed=5)
        assert e1 == pytest.approx(e2, rel=1e-12)
        assert s1 == pytest.approx(s2, rel=1e-12)
