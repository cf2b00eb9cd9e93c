"""
Limit laws and large-m expansions of the clumsy collection time
Gumbel, exponential and Gumbel-plus-hitting-time limits, the birth-death
Laplace transform, rescalings, the tail bound and the regime-dependent
mean and variance series
"""

import math

import numpy as np
from scipy import special

import config
from errors import NumericOverflow, ParameterError
from exact import i_extra, log_mgf_classical, loss_l, loss_n, mgf_eval
from models import Regime, RegimeTag, Rescaling
from quadrature import power_weighted, tanh_sinh
from utils.logger import get_module_logger

logger = get_module_logger('asymptotics')

EULER_GAMMA = float(np.euler_gamma)

__all__ = [
    'gumbel_cdf', 'gumbel_quantile', 'gumbel_mgf', 'exponential_cdf', 'exponential_quantile',
    'tau_c_laplace', 'tau_c_laplace_series', 'critical_limit_mgf', 'i_extra',
    'rescaling_for', 'rescale', 'harmonic', 'harmonic2', 'var_classical_float',
    'laplace_constants', 'fixed_p_mean_coefficients', 'fixed_p_variance_coefficients',
    'mean_asymptotic', 'variance_asymptotic', 'tail_bound', 'classical_mgf_limit_check',
]


def _as_output(values):
    return float(values) if np.ndim(values) == 0 else values


def gumbel_cdf(x):
    """Standard Gumbel distribution function exp(-e^{-x}); accepts arrays"""
    with np.errstate(over='ignore'):
        return _as_output(np.exp(-np.exp(-np.asarray(x, dtype=float))))


def gumbel_quantile(u):
    """Inverse of gumbel_cdf on (0, 1)"""
    return _as_output(-np.log(-np.log(np.asarray(u, dtype=float))))


def exponential_cdf(x):
    """Rate-one exponential distribution function"""
    x = np.asarray(x, dtype=float)
    return _as_output(np.where(x > 0, -np.expm1(-np.maximum(x, 0.0)), 0.0))


def exponential_quantile(u):
    return _as_output(-np.log1p(-np.asarray(u, dtype=float)))


def gumbel_mgf(t):
    """E e^{tG} = Gamma(1 - t) for t < 1"""
    if t >= 1:
        raise ParameterError(f"the Gumbel MGF is finite only for t < 1, got {t}")
    return float(special.gamma(1.0 - t))


def tau_c_laplace(c, s, rel_tol=None):
    """
    E e^{-s tau_c} for the birth-death hitting time started from Poisson(c).

    Integrating the defining expression by parts (substituting y = 1 - x),

        E e^{-s tau_c} = 1 / (1 + s int_0^1 y^(s-1) (e^{c y} - 1) dy)

    which has a bounded integrand and no cancellation at large c.
    """
    rel_tol = config.DEFAULT_REL_TOL if rel_tol is None else rel_tol
    if not c > 0:
        raise ParameterError(f"c must be positive, got {c}")
    if s < 0:
        raise ParameterError(f"the Laplace transform needs s >= 0, got {s}")
    if s == 0:
        return 1.0

    value = power_weighted(lambda y: np.expm1(c * y), s, rel_tol=rel_tol / 10, growth=c)
    return 1.0 / (1.0 + value)


def tau_c_laplace_series(c, s):
    """Closed form 1 / 1F1(s; s+1; c) of tau_c_laplace"""
    if s == 0:
        return 1.0
    return float(1.0 / special.hyp1f1(s, s + 1.0, c))


def critical_limit_mgf(c, t, rel_tol=None):
    """MGF of G + tau_c at t <= 0"""
    if t > 0:
        raise ParameterError(f"the critical limit MGF is evaluated for t <= 0, got {t}")
    return gumbel_mgf(t) * tau_c_laplace(c, -t, rel_tol)


def rescaling_for(m, p, regime):
    """
    Centering and scale of the limit theorem for the regime.

    Subcritical and critical: (T - m ln m) / m.
    Supercritical and fixed p: p (1-p)^m (T - m ln m).
    """
    regime = regime if isinstance(regime, Regime) else Regime(regime)
    center = m * math.log(m)
    if regime.tag in (RegimeTag.SUBCRITICAL, RegimeTag.CRITICAL):
        return Rescaling(center=center, scale=float(m), divide=True)
    p = float(p)
    if p <= 0:
        raise ParameterError(f"the {regime.tag.value} rescaling needs p > 0")
    scale = p * math.exp(m * math.log1p(-p))
    return Rescaling(center=center, scale=scale, divide=False)


def rescale(samples, m, p, regime):
    """Apply the regime's rescaling to raw collection times"""
    return rescaling_for(m, p, regime).apply(samples)


def harmonic(m):
    """H_m = psi(m + 1) + gamma"""
    return float(special.digamma(m + 1.0)) + EULER_GAMMA


def harmonic2(m):
    """Second-order harmonic number pi^2/6 - psi'(m + 1)"""
    if m <= 1000:
        return math.fsum(1.0 / ell ** 2 for ell in range(1, m + 1))
    return math.pi ** 2 / 6 - float(special.polygamma(1, m + 1.0))


def var_classical_float(m):
    return m * m * harmonic2(m) - m * harmonic(m)


def laplace_constants(p):
    """
    Coefficients of int_0^1 e^{-lam h(x)} L(x) dx ~ sum_k c_k (k+2)! / lam^(k+3)
    for h(x) = -log(1 - p x) / p = x + p x^2 / 2 + p^2 x^3 / 3 + ...
    """
    return 0.5, 1.0 / 6.0 - p, 1.0 / 12.0 - 5.0 * p / 12.0 + 25.0 * p * p / 24.0


def fixed_p_mean_coefficients(p):
    """(1, a1, a2) with E[T_p - T_0] ~ (1-p)^(-m) / p * (1 + a1/m + a2/m^2)"""
    if not 0 < p < 1:
        raise ParameterError(f"the fixed-p series needs 0 < p < 1, got {p}")
    c0, c1, c2 = laplace_constants(p)
    a1 = 10.0 * c0 + 6.0 * c1 / p
    a2 = 36.0 * c0 + 42.0 * c1 / p + 24.0 * c2 / (p * p)
    return 1.0, a1, a2


def fixed_p_variance_coefficients(p):
    """Square of the mean series: Var(T_p) - Var(T_0) is led by E[T_p - T_0]^2"""
    _, a1, a2 = fixed_p_mean_coefficients(p)
    return 1.0, 2.0 * a1, a1 * a1 + 2.0 * a2


def _leading_excess(m, p):
    """(1-p)^(-m) / p"""
    log_value = -m * math.log1p(-p) - math.log(p)
    if log_value > 700:
        raise NumericOverflow(f"(1-p)^(-m)/p overflows a float for m={m}, p={p}",
                              log10_value=log_value / math.log(10))
    return math.exp(log_value)


def _critical_integral(c, kernel, rel_tol):
    value, _ = tanh_sinh(lambda x: np.exp(-c * x) * kernel(x), 0.0, 1.0, rel_tol=rel_tol / 10)
    return value


def _critical_mean_factor(c, rel_tol):
    """c + c^2 e^c int_0^1 e^{-cx} L(x) dx, the limit of E[T_p - T_0] / m (also E tau_c)"""
    return c + c * c * math.exp(c) * _critical_integral(c, loss_l, rel_tol)


def _validated(params, regime):
    regime = regime if isinstance(regime, Regime) else Regime(regime)
    p = params.p_float
    if regime.tag in (RegimeTag.SUPERCRITICAL, RegimeTag.FIXED_P) and p <= 0:
        raise ParameterError(f"the {regime.tag.value} expansion needs p > 0")
    if regime.tag is RegimeTag.CRITICAL and p > 0:
        implied = p * params.m
        if abs(implied - regime.c) > 0.5 * regime.c:
            logger.warning(f"critical expansion with c={regime.c} at p*m={implied:.3g}")
    return regime, p


def mean_asymptotic(params, regime, rel_tol=None):
    """
    Large-m expansion of E T in the given regime.

    Parameters:
    -----------
    params : ModelParams
        Point of the p-sequence at which the expansion is evaluated
    regime : Regime
        Caller-supplied regime; critical carries c
    rel_tol : float, optional
        Tolerance of the critical-regime quadrature

    Returns:
    --------
    float
        m H_m plus the regime's correction
    """
    rel_tol = config.DEFAULT_REL_TOL if rel_tol is None else rel_tol
    regime, p = _validated(params, regime)
    m = params.m
    base = m * harmonic(m)
    if regime.tag is RegimeTag.SUBCRITICAL:
        return base + p * m * m + p * p * m ** 3 / 4.0
    if regime.tag is RegimeTag.CRITICAL:
        return base + m * _critical_mean_factor(regime.c, rel_tol)
    lead = _leading_excess(m, p)
    if regime.tag is RegimeTag.SUPERCRITICAL:
        return base + lead
    _, a1, a2 = fixed_p_mean_coefficients(p)
    return base + lead * (1.0 + a1 / m + a2 / (m * m))


def variance_asymptotic(params, regime, rel_tol=None):
    """Large-m expansion of Var T in the given regime, on top of Var T_{m,0}"""
    rel_tol = config.DEFAULT_REL_TOL if rel_tol is None else rel_tol
    regime, p = _validated(params, regime)
    m = params.m
    base = var_classical_float(m)
    if regime.tag is RegimeTag.SUBCRITICAL:
        return base + 2.0 * p * m ** 3 - p * m * m + 1.25 * p * p * m ** 4
    if regime.tag is RegimeTag.CRITICAL:
        c = regime.c
        factor = _critical_mean_factor(c, rel_tol)
        second = 2.0 * c + c * c * math.exp(c) * _critical_integral(c, loss_n, rel_tol)
        return base + m * m * (factor * factor + second) - m * factor
    lead = _leading_excess(m, p)
    if regime.tag is RegimeTag.SUPERCRITICAL:
        return base + lead * lead
    _, b1, b2 = fixed_p_variance_coefficients(p)
    return base + lead * lead * (1.0 + b1 / m + b2 / (m * m))


def tail_bound(params, r, rel_tol=None):
    """P(T >= r) <= 2 - 2 E e^{-T/r}, clamped to [0, 2]"""
    if not r > 0:
        raise ParameterError(f"the tail bound needs r > 0, got {r}")
    if math.isinf(r):
        return 0.0
    bound = 2.0 - 2.0 * mgf_eval(params, -1.0 / r, rel_tol)
    return min(max(bound, 0.0), 2.0)


def classical_mgf_limit_check(m, t):
    """m^{-t} E e^{(t/m) T_{m,0}}, which tends to Gamma(1 - t)"""
    if t > 0:
        raise ParameterError(f"the classical limit check needs t <= 0, got {t}")
    return math.exp(-t * math.log(m) + log_mgf_classical(m, t / m))
