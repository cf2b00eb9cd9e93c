"""
Tests for limit laws, rescalings and large-m expansions
"""
import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import special

import asymptotics
import exact
from errors import NumericOverflow, ParameterError
from models import ModelParams, Regime

# E tau_1 = sum_k 1/(k k!)
MEAN_TAU_1 = 1.3179021514544038


class TestLimitLaws:
    """Distribution functions, quantiles and transforms"""

    def test_gumbel(self):
        assert asymptotics.gumbel_cdf(0.0) == pytest.approx(math.exp(-1.0))
        x = np.array([-2.0, 0.3, 4.0])
        assert np.allclose(asymptotics.gumbel_quantile(asymptotics.gumbel_cdf(x)), x)
        assert asymptotics.gumbel_cdf(-50.0) == 0.0

    def test_exponential(self):
        assert asymptotics.exponential_cdf(-1.0) == 0.0
        assert asymptotics.exponential_cdf(1.0) == pytest.approx(1 - math.exp(-1.0))
        assert asymptotics.exponential_quantile(0.5) == pytest.approx(math.log(2.0))

    def test_gumbel_mgf(self):
        """E e^{tG} = Gamma(1 - t), finite only for t < 1"""
        assert asymptotics.gumbel_mgf(-1.0) == pytest.approx(1.0)
        assert asymptotics.gumbel_mgf(0.5) == pytest.approx(math.sqrt(math.pi))
        with pytest.raises(ParameterError):
            asymptotics.gumbel_mgf(1.0)

    def test_hitting_time_transform(self):
        """E e^{-tau_2} = 2 / (e^2 - 1)"""
        expected = 2.0 / (math.exp(2.0) - 1.0)
        assert expected == pytest.approx(0.313035, abs=1e-6)
        assert asymptotics.tau_c_laplace(2.0, 1.0) == pytest.approx(expected, rel=1e-10)
        assert asymptotics.tau_c_laplace(2.0, 0.0) == 1.0

    @pytest.mark.parametrize('c,s', [(0.5, 0.3), (3.0, 0.7), (10.0, 2.5)])
    def test_hitting_time_transform_series(self, c, s):
        """Quadrature agrees with 1 / 1F1(s; s+1; c)"""
        assert asymptotics.tau_c_laplace(c, s) == pytest.approx(asymptotics.tau_c_laplace_series(c, s), rel=1e-9)

    def test_hitting_time_mean(self):
        """-d/ds of the transform at 0 is E tau_1"""
        h = 1e-5
        slope = (1.0 - asymptotics.tau_c_laplace(1.0, h)) / h
        assert slope == pytest.approx(MEAN_TAU_1, rel=1e-3)

    @pytest.mark.parametrize('c', [0.5, 1.0, 2.0, 10.0])
    def test_hitting_time_transform_decreases_in_s(self, c):
        """A Laplace transform of a positive time lies in (0, 1] and decreases in s"""
        values = [asymptotics.tau_c_laplace(c, s) for s in (0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0)]
        assert all(0 < value <= 1 for value in values)
        assert all(a > b for a, b in zip(values, values[1:]))

    @pytest.mark.parametrize('c', [0.5, 2.0, 10.0])
    def test_hitting_time_transform_at_large_s(self, c):
        """For large s the transform approaches P(tau_c = 0) = e^{-c}"""
        assert asymptotics.tau_c_laplace(c, 50.0) == pytest.approx(asymptotics.tau_c_laplace_series(c, 50.0),
                                                                   rel=1e-8)
        assert asymptotics.tau_c_laplace(c, 1e6) == pytest.approx(math.exp(-c), rel=1e-4)

    def test_extra_time_transform_is_log_convex(self):
        """log I(t) has nonnegative second differences"""
        params = ModelParams(5, 0.3)
        logs = np.log([asymptotics.i_extra(params, t) for t in np.linspace(-3.0, -0.25, 12)])
        assert np.all(logs[:-2] - 2 * logs[1:-1] + logs[2:] >= -1e-9)

    def test_invalid_transform_arguments(self):
        with pytest.raises(ParameterError):
            asymptotics.tau_c_laplace(0.0, 1.0)
        with pytest.raises(ParameterError):
            asymptotics.tau_c_laplace(1.0, -0.5)
        with pytest.raises(ParameterError):
            asymptotics.critical_limit_mgf(1.0, 0.2)

    def test_critical_limit_mgf_factorises(self):
        value = asymptotics.critical_limit_mgf(1.0, -0.5)
        assert value == pytest.approx(special.gamma(1.5) * asymptotics.tau_c_laplace(1.0, 0.5))

    def test_extra_time_transform_converges(self):
        """I(m, c/m, t/m) tends to E e^{t tau_c}"""
        m, c, t = 2000, 1.0, -1.0
        value = asymptotics.i_extra(ModelParams(m, c / m), t / m)
        assert value == pytest.approx(asymptotics.tau_c_laplace(c, -t), rel=5e-3)

    def test_classical_limit(self):
        """m^{-t} E e^{(t/m) T_0} tends to Gamma(1 - t)"""
        assert asymptotics.classical_mgf_limit_check(10 ** 5, -0.5) == pytest.approx(special.gamma(1.5), rel=2e-3)
        with pytest.raises(ParameterError):
            asymptotics.classical_mgf_limit_check(10, 0.5)


class TestRescaling:
    """Regime-dependent centring and scaling"""

    def test_divided_regimes(self):
        for regime in (Regime.subcritical(), Regime.critical(2.0)):
            rescaling = asymptotics.rescaling_for(100, 0.01, regime)
            assert rescaling.center == pytest.approx(100 * math.log(100))
            assert rescaling.scale == 100.0
            assert rescaling.divide

    def test_multiplied_regimes(self):
        rescaling = asymptotics.rescaling_for(50, 0.2, 'fixed_p')
        assert rescaling.scale == pytest.approx(0.2 * 0.8 ** 50)
        assert not rescaling.divide
        values = asymptotics.rescale([50 * math.log(50)], 50, 0.2, Regime.supercritical())
        assert values.tolist() == pytest.approx([0.0])

    def test_multiplied_regime_needs_positive_p(self):
        with pytest.raises(ParameterError):
            asymptotics.rescaling_for(50, 0.0, Regime.supercritical())


class TestHarmonicNumbers:

    def test_harmonic(self):
        assert asymptotics.harmonic(10) == pytest.approx(math.fsum(1.0 / k for k in range(1, 11)), rel=1e-13)

    def test_second_order(self):
        """Direct sum and the trigamma form agree across the switch-over"""
        direct = math.fsum(1.0 / k ** 2 for k in range(1, 5001))
        assert asymptotics.harmonic2(5000) == pytest.approx(direct, rel=1e-13)

    def test_classical_variance(self):
        assert asymptotics.var_classical_float(3) == pytest.approx(float(exact.var_classical(3)))


class TestExpansions:
    """Large-m mean and variance series"""

    def test_half_coefficients(self):
        """At p = 1/2 the mean series is 1 + 1/m + 3/m^2 and the variance series 1 + 2/m + 7/m^2"""
        assert asymptotics.fixed_p_mean_coefficients(0.5) == pytest.approx((1.0, 1.0, 3.0))
        assert asymptotics.fixed_p_variance_coefficients(0.5) == pytest.approx((1.0, 2.0, 7.0))

    @pytest.mark.parametrize('p', [0.1, 0.3, 0.7])
    def test_mean_coefficients(self, p):
        """a1 = 1/p - 1 and a2 = 1 - 3/p + 2/p^2"""
        _, a1, a2 = asymptotics.fixed_p_mean_coefficients(p)
        assert a1 == pytest.approx(1 / p - 1)
        assert a2 == pytest.approx(1 - 3 / p + 2 / p ** 2)

    def test_coefficients_need_interior_p(self):
        with pytest.raises(ParameterError):
            asymptotics.fixed_p_mean_coefficients(0.0)

    def test_fixed_p_mean(self):
        """The three-term series tracks the exact mean"""
        params = ModelParams(200, 0.3)
        expected = float(exact.mean_closed(params))
        assert asymptotics.mean_asymptotic(params, Regime.fixed_p()) == pytest.approx(expected, rel=1e-4)

    def test_fixed_p_expansion_improves_on_the_leading_term(self):
        params = ModelParams(60, 0.25)
        expected = float(exact.mean_closed(params))
        series = asymptotics.mean_asymptotic(params, Regime.fixed_p())
        leading = asymptotics.mean_asymptotic(params, Regime.supercritical())
        assert abs(series - expected) < abs(leading - expected)

    def test_subcritical_mean(self):
        m = 1000
        params = ModelParams(m, 1.0 / m ** 2)
        expected = float(exact.mean_closed(params))
        assert asymptotics.mean_asymptotic(params, Regime.subcritical()) == pytest.approx(expected, rel=1e-7)

    def test_critical_mean_factor(self):
        """E T - m H_m ~ m E tau_c"""
        m = 10 ** 4
        params = ModelParams(m, 1.0 / m)
        excess = asymptotics.mean_asymptotic(params, Regime.critical(1.0)) - m * asymptotics.harmonic(m)
        assert excess / m == pytest.approx(MEAN_TAU_1, rel=1e-8)

    def test_critical_mean_close_to_exact(self):
        m = 400
        params = ModelParams(m, 1.0 / m)
        expected = float(exact.mean_closed(params))
        assert asymptotics.mean_asymptotic(params, Regime.critical(1.0)) == pytest.approx(expected, rel=5e-3)

    def test_critical_variance_factor(self):
        """(Var T - Var T_0) / m^2 approaches Var tau_1"""
        m = 10 ** 4
        params = ModelParams(m, 1.0 / m)
        excess = asymptotics.variance_asymptotic(params, Regime.critical(1.0)) - asymptotics.var_classical_float(m)
        assert excess / m ** 2 == pytest.approx(4.0297, abs=0.01)

    def test_fixed_p_variance(self):
        params = ModelParams(200, 0.3)
        expected = float(exact.variance_closed(params))
        assert asymptotics.variance_asymptotic(params, Regime.fixed_p()) == pytest.approx(expected, rel=1e-4)

    def test_overflow(self):
        with pytest.raises(NumericOverflow):
            asymptotics.mean_asymptotic(ModelParams(5000, 0.5), Regime.fixed_p())

    def test_fixed_p_needs_positive_p(self):
        with pytest.raises(ParameterError):
            asymptotics.variance_asymptotic(ModelParams(10, Fraction(0)), Regime.supercritical())


class TestTailBound:

    def test_bound_dominates_exact_tail(self):
        """P(T >= r) <= 2 - 2 E e^{-T/r}"""
        params = ModelParams(2, Fraction(1, 2))
        pmf = exact.pmf_series(params, 40)
        for r in (4, 8, 16, 32):
            bound = asymptotics.tail_bound(params, float(r))
            assert float(exact.tail_from_pmf(pmf, r - 1)) <= bound <= 2.0

    def test_edge_cases(self):
        params = ModelParams(3, 0.1)
        assert asymptotics.tail_bound(params, math.inf) == 0.0
        with pytest.raises(ParameterError):
            asymptotics.tail_bound(params, 0.0)
