"""
Tests for the tanh-sinh quadrature engine
"""
import math

import numpy as np
import pytest

from errors import QuadratureError
from quadrature import integrate, power_weighted, tanh_sinh


class TestTanhSinh:
    """Smooth, endpoint-singular and failing integrands"""

    def test_polynomial(self):
        """x^2 on [0, 1] integrates to 1/3"""
        value, error = tanh_sinh(lambda x: x ** 2, 0.0, 1.0, rel_tol=1e-12)
        assert value == pytest.approx(1.0 / 3.0, rel=1e-12)
        assert error >= 0

    def test_endpoint_singularity(self):
        """x^(-1/2) is integrable at 0 and the nodes never touch the endpoint"""
        assert integrate(lambda x: 1.0 / np.sqrt(x), 0.0, 1.0, rel_tol=1e-10) == pytest.approx(2.0, rel=1e-9)

    def test_log_singularity_at_right_endpoint(self):
        """-log(1 - x) on [0, 1] integrates to 1"""
        assert integrate(lambda x: -np.log1p(-x), 0.0, 1.0) == pytest.approx(1.0, rel=1e-9)

    def test_long_interval(self):
        """e^{-t} on [0, 40] is 1 - e^{-40}"""
        assert integrate(lambda t: np.exp(-t), 0.0, 40.0) == pytest.approx(1.0 - math.exp(-40.0), rel=1e-9)

    def test_reversed_and_empty_intervals(self):
        """Swapping the limits flips the sign; a == b gives zero"""
        forward = integrate(np.cos, 0.0, 1.0)
        assert integrate(np.cos, 1.0, 0.0) == pytest.approx(-forward)
        assert tanh_sinh(np.cos, 0.5, 0.5) == (0.0, 0.0)

    def test_failure_carries_estimate(self):
        """Unmet tolerance raises with the last estimate attached"""
        with pytest.raises(QuadratureError) as info:
            tanh_sinh(lambda x: np.cos(20 * x), 0.0, 1.0, rel_tol=1e-30, max_level=1, min_level=1)
        assert info.value.estimate is not None
        assert info.value.error_estimate > 0

    def test_non_finite_integrand(self):
        """A non-finite integrand value is reported as a quadrature failure"""
        with pytest.raises(QuadratureError):
            tanh_sinh(lambda x: np.full_like(x, np.inf), 0.0, 1.0)


class TestPowerWeighted:
    """alpha * int_0^1 y^(alpha-1) f(y) dy on both sides of alpha = 1"""

    @pytest.mark.parametrize('alpha', [0.25, 0.5, 1.0, 3.0, 50.0, 1e8])
    def test_linear_integrand(self, alpha):
        """f(y) = y gives alpha / (alpha + 1)"""
        assert power_weighted(lambda y: y, alpha, rel_tol=1e-11) == pytest.approx(alpha / (alpha + 1.0), rel=1e-9)

    @pytest.mark.parametrize('alpha', [0.5, 2.0, 1e6])
    def test_exponential_integrand(self, alpha):
        """f(y) = e^{cy} - 1 tends to e^c - 1 as alpha grows"""
        c = 3.0
        value = power_weighted(lambda y: np.expm1(c * y), alpha, rel_tol=1e-11, growth=c)
        assert 0 < value < math.expm1(c)
        if alpha > 1e5:
            assert value == pytest.approx(math.expm1(c), rel=1e-4)
