"""
Adaptive tanh-sinh (double exponential) quadrature on finite intervals
Shared by the Laplace-Borel transform, the moment integrals and the
limit-law transforms
"""

import math

import numpy as np

import config
from errors import QuadratureError
from utils.logger import get_module_logger

logger = get_module_logger('quadrature')

_PI_OVER_2 = math.pi / 2.0
# At |t| = 4 the weights are below 1e-35; integrands must be bounded near the
# endpoints or decay like a positive power of the distance to them
_T_MAX = 4.0


def _level_nodes(h, odd_only):
    """Nodes t = k*h in [-T_MAX, T_MAX]; with odd_only only the new ones of this level"""
    k_max = int(_T_MAX / h)
    if odd_only:
        k = np.arange(1, k_max + 1, 2)
        k = np.concatenate((-k[::-1], k))
    else:
        k = np.arange(-k_max, k_max + 1)
    return k * h


def _abscissae(t, a, b):
    """
    Map auxiliary nodes t to [a, b].

    The distance to the nearer endpoint is computed directly, so nodes
    crowding an endpoint stay distinct from it and integrands with
    integrable endpoint singularities can be evaluated there.

    Returns
    -------
    tuple of numpy.ndarray
        (x, weight) with weight = dx/dt
    """
    half = 0.5 * (b - a)
    s = _PI_OVER_2 * np.sinh(t)
    with np.errstate(over='ignore'):
        # 2/(1+e^{2s}) = 1 - tanh(s)
        near_b = 2.0 / (1.0 + np.exp(2.0 * s))
        near_a = 2.0 / (1.0 + np.exp(-2.0 * s))
        weight = half * _PI_OVER_2 * np.cosh(t) / np.cosh(s) ** 2
    x = np.where(t <= 0, a + half * near_a, b - half * near_b)
    inside = (x > a) & (x < b) & (weight > 0)
    return x[inside], weight[inside]


def _weighted_sum(f, t, a, b):
    x, w = _abscissae(t, a, b)
    if x.size == 0:
        return 0.0
    values = np.asarray(f(x), dtype=float)
    values = np.broadcast_to(values, x.shape)
    if not np.all(np.isfinite(values)):
        raise QuadratureError("integrand returned a non-finite value inside the interval")
    return math.fsum(w * values)


def tanh_sinh(f, a, b, rel_tol=None, abs_tol=0.0, max_level=10, min_level=3):
    """
    Integrate f over [a, b] with step-halving tanh-sinh refinement.

    Parameters:
    -----------
    f : callable
        Vectorised integrand taking and returning numpy arrays
    a, b : float
        Finite integration limits
    rel_tol : float, optional
        Relative tolerance, defaults to config.DEFAULT_REL_TOL
    abs_tol : float
        Absolute tolerance floor
    max_level : int
        Maximum number of step halvings (step 2**-max_level)
    min_level : int
        Levels always computed before the convergence test applies

    Returns:
    --------
    tuple
        (value, error_estimate)

    Raises:
    -------
    QuadratureError
        When max_level is reached without meeting the tolerance; the
        last estimate and its error estimate travel with the exception
    """
    rel_tol = config.DEFAULT_REL_TOL if rel_tol is None else rel_tol
    if a == b:
        return 0.0, 0.0
    if a > b:
        value, err = tanh_sinh(f, b, a, rel_tol, abs_tol, max_level, min_level)
        return -value, err

    h = 1.0
    total = _weighted_sum(f, _level_nodes(h, odd_only=False), a, b)
    estimate = h * total
    error = math.inf
    for level in range(1, max_level + 1):
        h /= 2.0
        total += _weighted_sum(f, _level_nodes(h, odd_only=True), a, b)
        new_estimate = h * total
        error = abs(new_estimate - estimate)
        estimate = new_estimate
        if level >= min_level and error <= max(abs_tol, rel_tol * abs(estimate)):
            logger.debug(f"tanh-sinh converged at level {level} on [{a}, {b}]: "
                         f"{estimate!r} +/- {error:.3e}")
            return estimate, error

    raise QuadratureError(
        f"tanh-sinh did not reach rel_tol={rel_tol:g} on [{a}, {b}] after "
        f"{max_level} levels (estimate {estimate!r}, error estimate {error:.3e})",
        estimate=estimate,
        error_estimate=error,
    )


def integrate(f, a, b, rel_tol=None, abs_tol=0.0):
    """Value of the integral only; see tanh_sinh"""
    value, _ = tanh_sinh(f, a, b, rel_tol=rel_tol, abs_tol=abs_tol)
    return value


def power_weighted(f, alpha, rel_tol=None, growth=1.0):
    """
    alpha * int_0^1 y^(alpha-1) f(y) dy for f vanishing at 0.

    For alpha > 1 the weight piles up at y = 1 in a layer of width 1/alpha,
    so y = e^{-u/alpha} is substituted instead:

        int_0^inf e^{-u} f(e^{-u/alpha}) du

    cut at u = 60 + log(1 + growth), where growth bounds f(1) / int_0^1 f.
    """
    rel_tol = config.DEFAULT_REL_TOL if rel_tol is None else rel_tol
    if alpha <= 1.0:
        def integrand(y):
            return np.exp((alpha - 1.0) * np.log(y)) * f(y)
        return alpha * integrate(integrand, 0.0, 1.0, rel_tol=rel_tol)

    def substituted(u):
        return np.exp(-u) * f(np.exp(-u / alpha))
    return integrate(substituted, 0.0, 60.0 + math.log1p(growth), rel_tol=rel_tol)
