import math
from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from memwalk import (
    DegenerateDenominator,
    SingularEvaluationPoint,
    autocorr_per_start,
    autocorrelation,
    evolve,
    evolve_rational,
    fourth_exact,
    fourth_series,
    hurst_amplitude,
    hurst_h,
    kurtosis_limit,
    moments,
    variance_exact,
    variance_growth_limit,
    variance_series,
    z_closed_eval,
    z_dp_eval,
    z_gaussian_limit,
)
from memwalk.profiles import ConstantCoupling


def moment_recursion(n_steps: int, eps: Fraction):
    """Independent oracle: one-step recursions for E[x^2] and E[x^4]."""
    v = u = Fraction(0)
    for _ in range(n_steps):
        u = u * (1 + 8 * eps) + (6 + 8 * eps) * v + 1
        v = v * (1 + 4 * eps) + 1
    return v, u


class TestGeneratingFunction:
    def test_dp_eval_binomial(self):
        for n, q in product((0, 1, 3, 6), (Fraction(2), Fraction(-1, 3))):
            weights = evolve_rational(n, Fraction(0))
            assert z_dp_eval(weights, q) == z_gaussian_limit(n, q)

    def test_dp_eval_singular_at_zero(self):
        with pytest.raises(SingularEvaluationPoint):
            z_dp_eval(evolve_rational(2, Fraction(0)), Fraction(0))

    def test_closed_equals_dp_grid(self):
        for n in range(0, 9):
            for eps in (Fraction(1, 10), Fraction(-1, 25), Fraction(3, 17)):
                weights = evolve_rational(n, eps)
                for q in (Fraction(2), Fraction(-1, 3), Fraction(5)):
                    assert z_closed_eval(n, eps, q) == z_dp_eval(weights, q)

    def test_closed_handles_uncoupled(self):
        q = Fraction(3, 2)
        assert z_closed_eval(5, Fraction(0), q) == z_gaussian_limit(5, q)

    def test_removable_singularity(self):
        # eps = -1/10 makes the literal denominator 1/(2 eps) + k vanish at
        # k = 5; the distributed form must still evaluate and agree with DP
        eps, n, q = Fraction(-1, 10), 7, Fraction(2)
        expected = z_dp_eval(evolve_rational(n, eps), q)
        assert z_closed_eval(n, eps, q) == expected
        with pytest.raises(DegenerateDenominator):
            z_closed_eval(n, eps, q, form="literal")

    def test_literal_matches_when_regular(self):
        eps, n, q = Fraction(1, 7), 6, Fraction(3, 2)
        assert z_closed_eval(n, eps, q, form="literal") == \
            z_closed_eval(n, eps, q)

    def test_singular_q_points(self):
        for q in (Fraction(0), Fraction(1), Fraction(-1)):
            with pytest.raises(SingularEvaluationPoint):
                z_closed_eval(4, Fraction(1, 10), q)

    def test_unknown_form_rejected(self):
        with pytest.raises(ValueError):
            z_closed_eval(4, Fraction(1, 10), Fraction(2), form="resummed")


class TestExactMoments:
    @pytest.mark.parametrize("n", [0, 1, 2, 3, 7, 13])
    @pytest.mark.parametrize("eps", [Fraction(0), Fraction(1, 10),
                                     Fraction(-1, 25), Fraction(3, 17)])
    def test_against_recursion_oracle(self, n, eps):
        v, u = moment_recursion(n, eps)
        assert variance_exact(n, eps) == v
        assert fourth_exact(n, eps) == u

    def test_against_dp_floats(self):
        for kappa in (0.3, -0.3):
            n = 50
            rep = moments(evolve(n, ConstantCoupling(kappa / n))[0])
            assert float(variance_exact(n, Fraction(kappa / n))) == \
                pytest.approx(rep.variance, rel=1e-12)
            assert float(fourth_exact(n, Fraction(kappa / n))) == \
                pytest.approx(rep.fourth, rel=1e-12)

    def test_series_truncation(self):
        # quadratic truncations: cubic remainder is negligible at eps=1e-4
        n, eps = 20, 1e-4
        assert variance_series(n, eps) == pytest.approx(
            float(variance_exact(n, Fraction(eps))), rel=1e-6)
        assert fourth_series(n, eps) == pytest.approx(
            float(fourth_exact(n, Fraction(eps))), rel=1e-6)

    def test_series_leading_terms(self):
        n = 9
        assert variance_series(n, 0.0) == pytest.approx(n)
        assert fourth_series(n, 0.0) == pytest.approx(n * (3 * n - 2))


class TestLimits:
    def test_kurtosis_limit_flat(self):
        for kappa in (0.0, 0.1, -0.5, 0.5):
            assert kurtosis_limit(kappa) == 3.0
        with pytest.raises(ValueError):
            kurtosis_limit(0.6)

    def test_variance_growth(self):
        assert variance_growth_limit(0.0) == pytest.approx(1.0)
        k = 0.4
        assert variance_growth_limit(k) == pytest.approx(
            math.expm1(4 * k) / (4 * k), rel=1e-14)
        # DP variance/N approaches the limit from below as N grows
        n = 4000
        rep = moments(evolve(n, ConstantCoupling(k / n))[0], max_order=2)
        assert rep.variance / n == pytest.approx(variance_growth_limit(k),
                                                 rel=2e-3)


def enumerate_lag_products(n_steps: int, eps: float, lag_end: int):
    """Brute force over all 2^n sign paths: E[d_{i+1} d_{i+L}] per start."""
    values = np.zeros(n_steps - lag_end + 1)
    for signs in product((-1, 1), repeat=n_steps):
        x = 0
        weight = 1.0
        for s in signs:
            weight *= 0.5 + x * eps * s
            x += s
        for i in range(n_steps - lag_end + 1):
            values[i] += weight * signs[i] * signs[i + lag_end - 1]
    return values


class TestAutocorrelation:
    def test_per_start_vs_enumeration(self):
        for n, lag, kappa in ((6, 2, 0.3), (6, 3, 0.3), (5, 2, -0.25)):
            eps = kappa / n
            brute = enumerate_lag_products(n, eps, lag)
            ours = autocorr_per_start(n, kappa, lag)
            assert ours == pytest.approx(brute, abs=1e-14)

    def test_window_mean_definition(self):
        res = autocorrelation(60, 0.4, 2)
        assert res.value_exact == pytest.approx(
            autocorr_per_start(60, 0.4, 2).mean(), rel=1e-14)

    def test_frozen_reference_values(self):
        res = autocorrelation(100, 0.4, 2)
        assert res.value_exact == pytest.approx(0.013630501429414334, rel=1e-13)
        assert res.value_leading == pytest.approx(0.02225066666666667, rel=1e-13)
        assert res.hurst_amplitude == pytest.approx(2.2266666666666666, rel=1e-13)

    def test_per_start_grows_with_coupling(self):
        vals = autocorr_per_start(80, 0.4, 2)
        assert np.all(np.diff(vals) > 0)
        neg = autocorr_per_start(80, -0.4, 2)
        assert np.all(neg < 0)

    def test_uncoupled_vanishes(self):
        assert autocorrelation(50, 0.0, 2).value_exact == 0.0
        assert np.all(autocorr_per_start(50, 0.0, 4) == 0.0)

    def test_lag_validation(self):
        with pytest.raises(ValueError):
            autocorrelation(10, 0.1, 1)
        with pytest.raises(ValueError):
            autocorrelation(3, 0.1, 4)

    def test_hurst_helpers(self):
        k = 0.4
        assert hurst_amplitude(k) == pytest.approx(1 + 2 * k + 8 * k * k / 3)
        assert hurst_amplitude(0.0) == 1.0
        assert hurst_h(0.0) == 0.5
        assert hurst_h(0.4) == 0.5
