"""
Exact finite-m law of the clumsy collection time
Two independent pmf routes (generating-function division and the urn-count
Markov chain), closed-form moments, the MGF and the moment integrals of the
difference between the clumsy and the classical collection times
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

import config
from errors import NumericOverflow, ParameterError
from langgf import EXACT, FLOAT, HP, RationalGF, field_for, generalized_binomial, ogf_g, ogf_h
from models import MomentReport, ModelParams, Pmf
from quadrature import power_weighted, tanh_sinh
from utils.logger import get_module_logger

logger = get_module_logger('exact')

# Sum-form cross-check of the MGF is attempted only in this range
SUM_FORM_MAX_M = 20
SUM_FORM_MAX_ABS_T = 1.0
# Below this the closed forms of L and N lose digits to cancellation
_SERIES_CUTOFF = 1e-4


def _require_n_max(params, n_max):
    if n_max < params.m:
        raise ParameterError(f"n_max must be at least m={params.m}, got {n_max}")


def _sum(field, values):
    values = list(values)
    if field.exact:
        return sum(values, Fraction(0))
    return HP.fsum(values)


def _check_finite(field, values, what):
    if field.exact:
        return
    for value in values:
        if HP.isinf(value) or HP.isnan(value):
            raise NumericOverflow(f"{what} overflowed the high-precision float range")


def geometric_tail_bound(params, n):
    """
    Bound on P(T > n) from blocks of m days: each block completes the
    collection with probability at least q = ((1-p)/m)^m.
    """
    field = field_for(params)
    one_minus_p = 1 - field(params.p)
    q = (one_minus_p / params.m) ** params.m
    blocks = max(0, math.ceil((n + 1 - params.m) / params.m))
    return (1 - q) ** blocks


def _certificate(params, n_max, tail_mass):
    """Geometric bound, or the exact residual when the bound is uninformative"""
    bound = geometric_tail_bound(params, n_max)
    if bound < 0.5:
        return bound, bound
    return tail_mass, bound


def pmf_series(params, n_max):
    """
    Pmf from the coefficients of the probability generating function
    ogf_H / ogf_G.

    Parameters:
    -----------
    params : ModelParams
        Coupon count and clumsiness
    n_max : int
        Truncation point, at least m

    Returns:
    --------
    Pmf
        probs[n] = P(T = n) for n <= n_max with certified tail mass
    """
    _require_n_max(params, n_max)
    field = field_for(params)
    pgf = ogf_h(params) / ogf_g(params)
    probs = pgf.series(n_max).coeffs
    _check_finite(field, probs, "pmf series")
    tail_mass = 1 - _sum(field, probs)
    certificate, bound = _certificate(params, n_max, tail_mass)
    return Pmf(params=params, probs=tuple(probs), n_max=n_max, tail_mass=tail_mass,
               tail_certificate=certificate, geometric_bound=bound, method='series')


def pmf_markov(params, n_max):
    """
    Pmf from the chain on the number k of non-empty urns.

    From k < m: k -> k+1 w.p. (1-p)(m-k)/m, k -> k-1 w.p. pk/m, otherwise
    stay; k = m absorbs.
    """
    _require_n_max(params, n_max)
    field = field_for(params)
    m = params.m
    p = field(params.p)
    one_minus_p = 1 - p
    up = [one_minus_p * (m - k) / m for k in range(m)]
    down = [p * k / m for k in range(m)]
    stay = [one_minus_p * k / m + p * (m - k) / m for k in range(m)]

    mass = [field.zero] * m
    mass[0] = field.one
    probs = [field.zero]
    for _ in range(n_max):
        absorbed = mass[m - 1] * up[m - 1]
        new_mass = []
        for k in range(m):
            value = mass[k] * stay[k]
            if k > 0:
                value = value + mass[k - 1] * up[k - 1]
            if k + 1 < m:
                value = value + mass[k + 1] * down[k + 1]
            new_mass.append(value)
        mass = new_mass
        probs.append(absorbed)

    tail_mass = _sum(field, mass)
    certificate, bound = _certificate(params, n_max, tail_mass)
    return Pmf(params=params, probs=tuple(probs), n_max=n_max, tail_mass=tail_mass,
               tail_certificate=certificate, geometric_bound=bound, method='markov')


def tail_from_pmf(pmf, n):
    """P(T > n) as the complement of the partial sum of the pmf"""
    if n > pmf.n_max:
        raise ParameterError(f"tail at n={n} needs a pmf beyond n_max={pmf.n_max}")
    if n < 0:
        return pmf.probs[0] * 0 + 1
    running = pmf.probs[0] * 0
    for prob in pmf.probs[:n + 1]:
        running = running + prob
    return 1 - running


def tail_gf(params):
    """
    Generating function of the tails P(T > n): (1 - PGF(z)) / (1 - z),
    built from the numerators of ogf_H and ogf_G.
    """
    field = field_for(params)
    one = [field.one]
    numerator_g = RationalGF(ogf_g(params).numerator, one)
    numerator_h = RationalGF(ogf_h(params).numerator, one)
    denominator = numerator_g * RationalGF([field.one, -field.one], one)
    return (numerator_g - numerator_h) / denominator


def _harmonic(m, field, power=1):
    return _sum(field, (field.one / ell ** power for ell in range(1, m + 1)))


def var_classical(m, field=EXACT):
    """Variance of the classical collection time, m^2 H_m^(2) - m H_m"""
    return m * m * _harmonic(m, field, power=2) - m * _harmonic(m, field)


def mean_closed(params):
    """E T = m sum_{l=1}^m 1 / (l (1-p)^l), ascending in l"""
    field = field_for(params)
    q = 1 / (1 - field(params.p))
    value = params.m * _sum(field, (q ** ell / ell for ell in range(1, params.m + 1)))
    _check_finite(field, [value], "mean")
    return value


def variance_closed(params):
    """
    Var T as a sum of two nonnegative parts, with q = 1/(1-p):

        2 m^2 sum_{i<j} q^j (q^i - 1) / (i j)
        + sum_l (m q^l / l) (m q^l / l - 1)

    The first part vanishes at p = 0; each factor m q^l / l is at least 1.
    """
    field = field_for(params)
    m = params.m
    q = 1 / (1 - field(params.p))
    powers = [field.one]
    for _ in range(m):
        powers.append(powers[-1] * q)

    cross_terms = []
    prefix = field.zero  # sum_{i<j} (q^i - 1)/i
    for j in range(1, m + 1):
        cross_terms.append(powers[j] / j * prefix)
        prefix = prefix + (powers[j] - 1) / j
    diagonal = [(m * powers[ell] / ell) * (m * powers[ell] / ell - 1) for ell in range(1, m + 1)]
    value = 2 * m * m * _sum(field, cross_terms) + _sum(field, diagonal)
    _check_finite(field, [value], "variance")
    return value


def variance_intermediate(params):
    """mu^2 - mu - 2 m^2 sum_{l=2}^m H_{l-1} / (l (1-p)^l), mu the mean"""
    field = field_for(params)
    m = params.m
    q = 1 / (1 - field(params.p))
    mu = mean_closed(params)
    harmonic = field.zero
    terms = []
    power = q
    for ell in range(2, m + 1):
        harmonic = harmonic + field.one / (ell - 1)
        power = power * q
        terms.append(harmonic * power / ell)
    return mu * mu - mu - 2 * m * m * _sum(field, terms)


def moments_closed(params):
    return MomentReport.from_mean_variance(mean_closed(params), variance_closed(params), 'closed_form')


def moments_from_pmf(pmf):
    """Moments of the truncated pmf; low by at most the tail contribution"""
    mean = pmf.mean_truncated()
    variance = pmf.second_moment_truncated() - mean * mean
    return MomentReport.from_mean_variance(mean, variance, 'pmf_sum')


def pgf_eval(params, x):
    """
    E x^T for x in [0, 1] as num_H(x) / num_G(x).

    The shared denominator cancels; every term of num_G is nonnegative on
    [0, 1], so there is no cancellation at any m.
    """
    use_exact = params.exact and isinstance(x, (Fraction, int))
    field = EXACT if use_exact else FLOAT
    x = field(x)
    if not 0 <= x <= 1:
        raise ParameterError(f"pgf_eval needs x in [0, 1], got {x}")
    m = params.m
    one_minus_p = 1 - field(params.p)
    # suffix[l] = prod_{k=l+1}^m (m - k x)
    suffix = [field.one] * (m + 1)
    for ell in range(m - 1, -1, -1):
        suffix[ell] = suffix[ell + 1] * (m - (ell + 1) * x)
    numerator_g = []
    falling = field.one
    x_power = field.one
    for ell in range(m + 1):
        if ell > 0:
            falling = falling * (m - ell + 1)
            x_power = x_power * x
        numerator_g.append(falling * one_minus_p ** ell * x_power * suffix[ell])
    numerator_h = one_minus_p ** m * math.factorial(m) * x ** m
    return numerator_h / _sum(field, numerator_g)


def log_mgf_classical(m, t):
    """
    -log binom(m e^{-t}, m) for t <= 0, as

        -sum_{k=1}^m log1p(x / k),  x = m e^{-t} - m

    with x up to about m e^{700}.
    """
    if t > 0:
        raise ParameterError(f"the MGF is evaluated for t <= 0 only, got {t}")
    excess = m * math.expm1(-t)
    return -math.fsum(np.log1p(excess / np.arange(1, m + 1, dtype=float)))


def mgf_classical(m, t):
    """E e^{t T} of the classical collector, 1 / binom(m e^{-t}, m)"""
    return math.exp(log_mgf_classical(m, t))


def i_extra(params, t, rel_tol=None):
    """
    MGF of the extra time T_{m,p} - T_{m,0} at t <= 0.

    Integrating the defining expression by parts, with alpha = m(e^{-t} - 1)
    and k = p/(1-p):

        1 / I = 1 + alpha * int_0^1 y^(alpha-1) ((1 + k y)^m - 1) dy

    whose integrand is bounded, so no cancellation against (1-p)^m occurs.
    As t -> -inf the value tends to (1-p)^m.
    """
    if t > 0:
        raise ParameterError(f"i_extra is evaluated for t <= 0 only, got {t}")
    p = params.p_float
    if t == 0 or p == 0:
        return 1.0
    m = params.m
    alpha = m * math.expm1(-t)
    k = p / (1.0 - p)

    def grown(y):
        with np.errstate(over='ignore'):
            return np.expm1(m * np.log1p(k * y))

    if m * math.log1p(k) > 700:
        raise NumericOverflow(f"i_extra integrand overflows for m={m}, p={p}",
                              log10_value=m * math.log10(1 + k))
    rel_tol = config.DEFAULT_REL_TOL if rel_tol is None else rel_tol
    value = power_weighted(grown, alpha, rel_tol=rel_tol / 10, growth=m)
    return 1.0 / (1.0 + value)


@dataclass(frozen=True)
class SumFormCheck:
    """Alternating-sum evaluation of the MGF with its cancellation ratio"""
    value: float
    cancellation_ratio: float
    reliable: bool


def mgf_sum_form(params, t, rel_tol=None):
    """
    1 / sum_{l=0}^m (-1)^l binom(m - m e^{-t}, l) (1-p)^{-l}.

    The sum alternates; cancellation_ratio = sum |terms| / |sum| measures
    how many digits were lost.
    """
    rel_tol = config.DEFAULT_REL_TOL if rel_tol is None else rel_tol
    if t > 0:
        raise ParameterError(f"the MGF is evaluated for t <= 0 only, got {t}")
    m = params.m
    nu = -m * math.expm1(-t)
    q = 1.0 / (1.0 - params.p_float)
    terms = []
    for ell in range(m + 1):
        sign, log_abs = generalized_binomial(nu, ell)
        if sign == 0:
            continue
        terms.append((-1) ** ell * sign * math.exp(log_abs + ell * math.log(q)))
    total = math.fsum(terms)
    magnitude = math.fsum(abs(term) for term in terms)
    ratio = magnitude / abs(total) if total != 0 else math.inf
    reliable = ratio * np.finfo(float).eps * (m + 1) < rel_tol
    return SumFormCheck(value=1.0 / total if total != 0 else math.inf,
                        cancellation_ratio=ratio, reliable=bool(reliable))


def mgf_eval(params, t, rel_tol=None):
    """
    E e^{t T} for t <= 0 in the factored form mgf_classical(m, t) * i_extra(t).

    For m <= 20 and |t| <= 1 the alternating-sum form is evaluated as a
    cross-check; cancellation or disagreement is logged and the factored
    value is returned regardless.
    """
    rel_tol = config.DEFAULT_REL_TOL if rel_tol is None else rel_tol
    if t > 0:
        raise ParameterError(f"the MGF is evaluated for t <= 0 only, got {t}")
    if t == 0:
        return 1.0
    value = mgf_classical(params.m, t) * i_extra(params, t, rel_tol)
    if params.m <= SUM_FORM_MAX_M and abs(t) <= SUM_FORM_MAX_ABS_T:
        check = mgf_sum_form(params, t, rel_tol)
        if not check.reliable:
            logger.warning(f"sum form of the MGF cancels at m={params.m}, t={t} "
                           f"(ratio {check.cancellation_ratio:.3g}); keeping the factored form")
        elif abs(check.value - value) > 100 * rel_tol * abs(value):
            logger.warning(f"MGF forms disagree at m={params.m}, p={params.p}, t={t}: "
                           f"factored {value!r}, sum {check.value!r}")
    return value


def loss_l(x):
    """L(x) = x + (1-x) log(1-x), with L(1) = 1 and a series near 0"""
    x = np.asarray(x, dtype=float)
    small = x < _SERIES_CUTOFF
    with np.errstate(divide='ignore', invalid='ignore'):
        y = 1.0 - x
        closed = x + np.where(y > 0, y * np.log(np.where(y > 0, y, 1.0)), 0.0)
    series = x ** 2 / 2 + x ** 3 / 6 + x ** 4 / 12 + x ** 5 / 20
    return np.where(small, series, closed)


def loss_n(x):
    """N(x) = (log^2(1-x) - 2 log(1-x) + 2)(x - 1) + 2, with N(1) = 2 and a series near 0"""
    x = np.asarray(x, dtype=float)
    small = x < _SERIES_CUTOFF
    with np.errstate(divide='ignore', invalid='ignore'):
        y = 1.0 - x
        log_y = np.log(np.where(y > 0, y, 1.0))
        closed = np.where(y > 0, -y * (log_y ** 2 - 2 * log_y + 2), 0.0) + 2.0
    series = x ** 3 / 3 + x ** 4 / 4 + 11 * x ** 5 / 60
    return np.where(small, series, closed)


def _scaled_weight(params):
    """x -> (1 - p x)^(m-2) / (1 - p)^m, evaluated in log space"""
    m, p = params.m, params.p_float
    log_scale = -m * math.log1p(-p)
    if log_scale > 700:
        raise NumericOverflow(f"(1-p)^(-m) overflows a float for m={m}, p={p}",
                              log10_value=log_scale / math.log(10))

    def weight(x):
        return np.exp((m - 2) * np.log1p(-p * np.asarray(x, dtype=float)) + log_scale)
    return weight


def mean_diff_integral(params, rel_tol=None):
    """
    E[T_{m,p} - T_{m,0}] as

        p m^2 / (1-p) + p^2 m^2 (m-1) int_0^1 (1-px)^(m-2) (1-p)^(-m) L(x) dx
    """
    rel_tol = config.DEFAULT_REL_TOL if rel_tol is None else rel_tol
    m, p = params.m, params.p_float
    if p == 0:
        return 0.0
    value = p * m * m / (1.0 - p)
    if m > 1:
        weight = _scaled_weight(params)
        integral, _ = tanh_sinh(lambda x: weight(x) * loss_l(x), 0.0, 1.0, rel_tol=rel_tol / 10)
        value += p * p * m * m * (m - 1) * integral
    return value


def second_moment_diff(params, rel_tol=None):
    """
    E[(T_{m,p} - T_{m,0})^2] = 2 E[D]^2 - E[D] + Xi with

        Xi = 2 p m^3 / (1-p) + p^2 m^3 (m-1) int_0^1 (1-px)^(m-2) (1-p)^(-m) N(x) dx
    """
    rel_tol = config.DEFAULT_REL_TOL if rel_tol is None else rel_tol
    m, p = params.m, params.p_float
    if p == 0:
        return 0.0
    mean_diff = mean_diff_integral(params, rel_tol)
    xi = 2.0 * p * m ** 3 / (1.0 - p)
    if m > 1:
        weight = _scaled_weight(params)
        integral, _ = tanh_sinh(lambda x: weight(x) * loss_n(x), 0.0, 1.0, rel_tol=rel_tol / 10)
        xi += p * p * m ** 3 * (m - 1) * integral
    return 2.0 * mean_diff * mean_diff - mean_diff + xi


def to_float(value):
    """Scalar to float, raising NumericOverflow with the magnitude when it does not fit"""
    try:
        result = float(value)
    except OverflowError:
        result = math.inf
    if math.isinf(result):
        if isinstance(value, Fraction):
            magnitude = math.log10(abs(value.numerator)) - math.log10(value.denominator)
        else:
            magnitude = float(HP.log10(abs(HP.mpf(value))))
        raise NumericOverflow(f"value does not fit in a float (log10 = {magnitude:.2f})",
                              log10_value=magnitude)
    return result
