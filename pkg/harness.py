"""
Verification harness
Suites that tie the exact law, the simulators and the asymptotic results
together and emit machine-readable reports. Every failure inside a check,
including exceptions, becomes a failed check rather than a crash.
"""

import json
import math
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, fields, replace
from fractions import Fraction
from typing import Optional, Tuple

import numpy as np
import pandas as pd

import asymptotics
import config
import exact
import langgf
import simulation_core
from errors import ParameterError
from models import BirthDeathSpec, CheckResult, ModelParams, Regime, Report
from statistical_analysis import StatisticalAnalyzer
from utils.logger import get_module_logger, log_exception

logger = get_module_logger('harness')
analyzer = StatisticalAnalyzer()


@dataclass(frozen=True)
class HarnessConfig:
    """Sizes, seeds and tolerances of every suite"""
    seed: int = 1
    workers: Optional[int] = None
    rel_tol: float = config.DEFAULT_REL_TOL

    oracle_m: Tuple[int, ...] = (1, 2, 3, 4, 5, 6)
    oracle_p: Tuple[str, ...] = ('0', '1/4', '1/2', '3/4')
    oracle_n_max: int = 200
    oracle_float_tol: float = 1e-12

    shape_m: Tuple[int, ...] = (1, 2, 3, 4, 5, 6, 7)
    shape_p: Tuple[str, ...] = ('0', '1/10', '1/5', '3/10', '2/5', '1/2', '3/5', '7/10', '4/5', '9/10')

    mgf_m: Tuple[int, ...] = tuple(range(1, 11))
    mgf_p: Tuple[float, ...] = (0.1, 0.5)
    mgf_t: Tuple[float, ...] = (-2.0, -1.0, -0.1)
    mgf_tol: float = 1e-9
    mgf_deep_t: Tuple[float, ...] = (-20.0, -50.0)

    tail_m: Tuple[int, ...] = (1, 2, 3, 4, 5)
    tail_p: Tuple[float, ...] = (0.1, 0.5)
    tail_r_multiples: Tuple[int, ...] = (1, 2, 10)

    independence_m: int = 2
    independence_p: float = 0.3
    independence_n: int = 100_000
    coupling_m: Tuple[int, ...] = (1, 2, 3, 4)
    coupling_p: Tuple[float, ...] = (0.25, 0.5)
    coupling_n: int = 100_000
    alpha: float = 1e-3

    subcritical_m: int = 2000
    subcritical_p: float = 1e-7
    subcritical_n: int = 10_000
    subcritical_threshold: float = 0.05

    supercritical_m: int = 40
    supercritical_p: float = 0.25
    supercritical_n: int = 2000
    supercritical_threshold: float = 0.06
    # KS distance of the m = 40 law from its exponential limit, measured at large N
    supercritical_bias: float = 0.031

    critical_c: float = 1.0
    critical_m: int = 1000
    critical_n: int = 10_000
    critical_threshold: float = 0.05
    critical_t: Tuple[float, ...] = (-0.5, -1.0)

    tau_c: Tuple[float, ...] = (0.5, 1.0, 2.0)
    tau_s: Tuple[float, ...] = (0.5, 1.0, 2.0)
    tau_n: int = 100_000

    expansion_m: Tuple[int, ...] = (10, 15, 20, 25)
    expansion_mean_bound: float = 60.0
    expansion_variance_bound: float = 150.0
    expansion_ratio_p: Tuple[str, ...] = ('3/10', '1/2')
    critical_study_m: Tuple[int, ...] = (100, 1000)
    critical_consistency_m: Tuple[int, ...] = (100, 1000, 10_000)
    critical_consistency_c: Tuple[float, ...] = (0.5, 1.0, 2.0)
    classical_limit_k: Tuple[int, ...] = (2, 3, 4, 5, 6)
    classical_limit_tol: float = 1e-3

    language_m: Tuple[int, ...] = (1, 2)
    language_p: Tuple[str, ...] = ('1/3', '1/2')
    language_max_length: int = 6
    language_x: Tuple[float, ...] = (0.1, 0.5, 0.9)
    language_tol: float = 1e-8

    @classmethod
    def from_overrides(cls, overrides):
        """
        Build a config from KEY=VALUE strings or a mapping.

        Values are coerced to the type of the field's default; tuples take
        comma-separated lists.
        """
        if not isinstance(overrides, dict):
            pairs = {}
            for item in overrides:
                if '=' not in item:
                    raise ParameterError(f"override {item!r} is not of the form KEY=VALUE")
                key, value = item.split('=', 1)
                pairs[key.strip()] = value.strip()
            overrides = pairs
        defaults = {f.name: f.default for f in fields(cls)}
        values = {}
        for key, value in overrides.items():
            if key not in defaults:
                raise ParameterError(f"unknown harness setting {key!r}")
            values[key] = _coerce(defaults[key], value) if isinstance(value, str) else value
        return cls(**values)

    def with_overrides(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        return {key: list(value) if isinstance(value, tuple) else value
                for key, value in asdict(self).items()}


def _coerce(default, text):
    if isinstance(default, tuple):
        element = default[0] if default else ''
        return tuple(_coerce(element, part.strip()) for part in text.split(',') if part.strip())
    if isinstance(default, bool):
        return text.lower() in ('1', 'true', 'yes')
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    if default is None:
        return int(text)
    return text


class _Checks:
    """Accumulates CheckResults; guard() turns exceptions into failed checks"""

    def __init__(self, suite):
        self.suite = suite
        self.results = []

    def add(self, check_id, expected, observed, tolerance, passed, detail=''):
        result = CheckResult(check_id=check_id, expected=expected, observed=observed,
                             tolerance=tolerance, passed=bool(passed), detail=detail)
        if not result.passed:
            logger.warning(f"[{self.suite}] {check_id} failed: expected {expected!r}, "
                           f"observed {observed!r} (tolerance {tolerance!r}) {detail}")
        self.results.append(result)
        return result

    def close(self, check_id, expected, observed, rel_tol=None, abs_tol=None, detail=''):
        """Relative (or absolute) closeness of two floats"""
        expected = float(expected)
        observed = float(observed)
        if abs_tol is not None:
            passed = abs(observed - expected) <= abs_tol
            tolerance = abs_tol
        else:
            passed = abs(observed - expected) <= rel_tol * abs(expected)
            tolerance = rel_tol
        return self.add(check_id, expected, observed, tolerance, passed, detail)

    @contextmanager
    def guard(self, check_id):
        try:
            yield
        except Exception as e:
            message = log_exception(logger, e, f"{self.suite}:{check_id}")
            self.add(check_id, None, None, None, False, f"{type(e).__name__}: {message}")


def _params(m, p):
    """Rational strings stay exact; floats run in high-precision float mode"""
    return ModelParams(m, Fraction(p) if isinstance(p, str) else p)


def _suite_oracle(cfg, checks):
    n_max = cfg.oracle_n_max
    for m in cfg.oracle_m:
        for p in cfg.oracle_p:
            check_id = f"oracle.exact.m{m}.p{p}"
            with checks.guard(check_id):
                params = _params(m, p)
                series = exact.pmf_series(params, n_max)
                markov = exact.pmf_markov(params, n_max)
                mismatch = next((n for n, (a, b) in enumerate(zip(series.probs, markov.probs))
                                 if a != b), None)
                checks.add(check_id, 'identical', 'identical' if mismatch is None else f"n={mismatch}",
                           0, mismatch is None and len(series.probs) == len(markov.probs))
            check_id = f"oracle.float.m{m}.p{p}"
            with checks.guard(check_id):
                params = ModelParams(m, float(Fraction(p)))
                series = exact.pmf_series(params, n_max)
                markov = exact.pmf_markov(params, n_max)
                gap = max(abs(float(a) - float(b)) for a, b in zip(series.probs, markov.probs))
                checks.add(check_id, 0.0, gap, cfg.oracle_float_tol, gap <= cfg.oracle_float_tol)

    for m in (1, 2, 3):
        check_id = f"oracle.tail_gf.m{m}"
        with checks.guard(check_id):
            params = ModelParams(m, Fraction(1, 2))
            order = 30
            coefficients = exact.tail_gf(params).series(order).coeffs
            pmf = exact.pmf_markov(params, order)
            tails = [exact.tail_from_pmf(pmf, n) for n in range(order + 1)]
            checks.add(check_id, 'identical', 'identical' if list(coefficients) == tails else 'differs',
                       0, list(coefficients) == tails)


def _increasing(values):
    return all(later > earlier for earlier, later in zip(values, values[1:]))


def _shape_checks(cfg, checks):
    """E T and Var T increase in m and in p; E T is convex in p"""
    ms = sorted(cfg.shape_m)
    ps = sorted(Fraction(p) for p in cfg.shape_p)
    table = {}
    with checks.guard('moments.shape.table'):
        for m in ms:
            for p in ps:
                params = ModelParams(m, p)
                table[m, p] = (exact.mean_closed(params), exact.variance_closed(params))
    if not table:
        return
    for index, name in enumerate(('mean', 'variance')):
        for p in ps:
            values = [table[m, p][index] for m in ms]
            checks.add(f"moments.increasing_m.{name}.p{p}", 'increasing', [str(v) for v in values],
                       0, _increasing(values))
        for m in ms:
            values = [table[m, p][index] for p in ps]
            checks.add(f"moments.increasing_p.{name}.m{m}", 'increasing', [str(v) for v in values],
                       0, _increasing(values))
    for m in ms:
        slopes = [(table[m, b][0] - table[m, a][0]) / (b - a) for a, b in zip(ps, ps[1:])]
        checks.add(f"moments.convex_p.mean.m{m}", 'increasing slopes', [str(s) for s in slopes],
                   0, _increasing(slopes), 'divided differences of E T over the p grid')


def _suite_moments(cfg, checks):
    examples = [
        ('moments.mean.m3.p0', 3, '0', exact.mean_closed, Fraction(11, 2)),
        ('moments.mean.m2.p1/2', 2, '1/2', exact.mean_closed, Fraction(8)),
        ('moments.variance.m1.p1/2', 1, '1/2', exact.variance_closed, Fraction(2)),
        ('moments.variance.m2.p0', 2, '0', exact.variance_closed, Fraction(2)),
        ('moments.variance.m2.p1/2', 2, '1/2', exact.variance_closed, Fraction(40)),
    ]
    for check_id, m, p, function, expected in examples:
        with checks.guard(check_id):
            observed = function(_params(m, p))
            checks.add(check_id, expected, observed, 0, observed == expected)

    with checks.guard('moments.var_classical.m2'):
        observed = exact.var_classical(2)
        checks.add('moments.var_classical.m2', Fraction(2), observed, 0, observed == 2)

    for m in cfg.oracle_m:
        for p in cfg.oracle_p:
            params = _params(m, p)
            check_id = f"moments.pmf_mean.m{m}.p{p}"
            with checks.guard(check_id):
                pmf = exact.pmf_markov(params, cfg.oracle_n_max)
                deficit = float(exact.mean_closed(params) - pmf.mean_truncated())
                bound = float(pmf.tail_mean_bound())
                checks.add(check_id, 0.0, deficit, bound, -1e-12 <= deficit <= bound,
                           'closed-form mean minus truncated pmf mean')
            check_id = f"moments.variance_forms.m{m}.p{p}"
            with checks.guard(check_id):
                closed = exact.variance_closed(params)
                intermediate = exact.variance_intermediate(params)
                checks.add(check_id, closed, intermediate, 0, closed == intermediate)

    _shape_checks(cfg, checks)

    for m, p in ((3, 0.2), (5, 0.5)):
        params = ModelParams(m, p)
        check_id = f"moments.mean_diff.m{m}.p{p}"
        with checks.guard(check_id):
            expected = float(exact.mean_closed(params)) - float(exact.mean_closed(ModelParams(m, 0)))
            checks.close(check_id, expected, exact.mean_diff_integral(params, cfg.rel_tol), rel_tol=1e-8)

    check_id = 'moments.decomposition.m3.p0.2'
    with checks.guard(check_id):
        params = ModelParams(3, 0.2)
        lhs = float(exact.variance_closed(params)) - float(exact.var_classical(3))
        mean_diff = exact.mean_diff_integral(params, cfg.rel_tol)
        rhs = exact.second_moment_diff(params, cfg.rel_tol) - mean_diff ** 2
        checks.close(check_id, lhs, rhs, rel_tol=1e-8,
                     detail='Var T_p - Var T_0 = E[D^2] - E[D]^2')


def _suite_mgf(cfg, checks):
    for check_id, function, expected in (
            ('mgf.example.m1.p1/2.t-1', exact.mgf_eval, 0.225399),
            ('mgf.i_extra.m1.p1/2.t-1', exact.i_extra, 0.612700)):
        with checks.guard(check_id):
            checks.close(check_id, expected, function(ModelParams(1, Fraction(1, 2)), -1.0),
                         abs_tol=1e-6)

    for m in cfg.mgf_m:
        for p in cfg.mgf_p:
            params = ModelParams(m, p)
            for t in cfg.mgf_t:
                suffix = f"m{m}.p{p}.t{t}"
                value = None
                with checks.guard(f"mgf.pgf_route.{suffix}"):
                    value = exact.mgf_eval(params, t, cfg.rel_tol)
                    via_pgf = float(exact.pgf_eval(params, math.exp(t)))
                    checks.close(f"mgf.pgf_route.{suffix}", via_pgf, value, rel_tol=cfg.mgf_tol,
                                 detail='factored MGF against the PGF numerator ratio at e^t')
                if value is None:
                    continue
                if m <= exact.SUM_FORM_MAX_M and abs(t) <= exact.SUM_FORM_MAX_ABS_T:
                    with checks.guard(f"mgf.sum_form.{suffix}"):
                        form = exact.mgf_sum_form(params, t, cfg.rel_tol)
                        if form.reliable:
                            checks.close(f"mgf.sum_form.{suffix}", value, form.value, rel_tol=1e-7,
                                         detail=f"cancellation ratio {form.cancellation_ratio:.3g}")

    for m in cfg.mgf_m:
        for p in cfg.mgf_p:
            params = ModelParams(m, p)
            for t in cfg.mgf_deep_t:
                check_id = f"mgf.deep_t.m{m}.p{p}.t{t}"
                with checks.guard(check_id):
                    checks.close(check_id, (1.0 - p) ** m, exact.i_extra(params, t, cfg.rel_tol),
                                 rel_tol=1e-6, detail='extra-time factor against its (1-p)^m limit')


def _suite_tail(cfg, checks):
    with checks.guard('tail.example.m1.p0.r1'):
        checks.close('tail.example.m1.p0.r1', 2 * (1 - math.exp(-1)),
                     asymptotics.tail_bound(ModelParams(1, 0), 1.0), rel_tol=1e-12)
    for m in cfg.tail_m:
        for p in cfg.tail_p:
            params = ModelParams(m, p)
            radii = [k * m for k in cfg.tail_r_multiples]
            pmf = None
            for r in radii:
                check_id = f"tail.bound.m{m}.p{p}.r{r}"
                with checks.guard(check_id):
                    if pmf is None:
                        pmf = exact.pmf_markov(params, max(radii))
                    exact_tail = float(exact.tail_from_pmf(pmf, r - 1))
                    bound = asymptotics.tail_bound(params, r, cfg.rel_tol)
                    checks.add(check_id, f"<= {bound!r}", exact_tail, 1e-12, exact_tail <= bound + 1e-12,
                               'P(T >= r) against 2 - 2 E e^{-T/r}')


def _suite_independence(cfg, checks):
    m, p, n = cfg.independence_m, cfg.independence_p, cfg.independence_n
    params = ModelParams(m, p)
    batch = None
    with checks.guard('independence.batch'):
        batch = simulation_core.simulate_batch(params, n, cfg.seed, retain=True, workers=cfg.workers)
    if batch is not None:
        classical = batch.t_classical.astype(float)
        difference = (batch.t_clumsy - batch.t_classical).astype(float)
        with checks.guard('independence.correlation'):
            rho = analyzer.correlation(classical, difference)
            limit = 4.0 / math.sqrt(n)
            checks.add('independence.correlation', 0.0, rho, limit, abs(rho) < limit)
        with checks.guard('independence.contingency'):
            _, p_value, dof = analyzer.independence_test(classical, difference)
            checks.add('independence.contingency', f"p > {cfg.alpha}", p_value, cfg.alpha,
                       p_value > cfg.alpha, f"chi-square independence, {dof} dof")
        with checks.guard('independence.variance_decomposition'):
            clumsy = batch.t_clumsy.astype(float)
            gap = clumsy.var(ddof=1) - classical.var(ddof=1) - difference.var(ddof=1)
            band = analyzer.se_band * math.sqrt(sum(analyzer.variance_standard_error(v) ** 2
                                       for v in (clumsy, classical, difference)))
            checks.add('independence.variance_decomposition', 0.0, gap, band, abs(gap) <= band)
        with checks.guard('independence.mean'):
            expected = float(exact.mean_closed(params))
            checks.add('independence.mean', expected, batch.clumsy.mean, analyzer.se_band * batch.clumsy.standard_error,
                       analyzer.within_standard_errors(
                           batch.clumsy.mean, expected, batch.clumsy.standard_error))

    for m in cfg.coupling_m:
        for p in cfg.coupling_p:
            check_id = f"independence.coupling_marginal.m{m}.p{p}"
            with checks.guard(check_id):
                params = ModelParams(m, p)
                seed = cfg.seed + 1000 + 10 * m + int(100 * p)
                result = simulation_core.simulate_batch(params, cfg.coupling_n, seed, retain=True,
                                                        workers=cfg.workers)
                n_max = int(20 * float(exact.mean_closed(params))) + m
                pmf = exact.pmf_markov(params, n_max)
                _, p_value, dof = analyzer.chi_square_pmf_test(result.t_clumsy, pmf.probs)
                checks.add(check_id, f"p > {cfg.alpha}", p_value, cfg.alpha, p_value > cfg.alpha,
                           f"empirical T against the exact pmf, {dof} dof")


def _ks_limit_check(checks, check_id, sorted_rescaled, cdf, threshold, detail):
    result = analyzer.ks_one_sample(sorted_rescaled, cdf, threshold=threshold)
    checks.add(check_id, f"< {threshold}", result.statistic, threshold, result.passed, detail)
    return result


def _limit_batch(cfg, m, p, n, seed):
    return simulation_core.simulate_batch(ModelParams(m, p), n, seed, retain=True, workers=cfg.workers)


def _suite_subcritical(cfg, checks):
    m, p = cfg.subcritical_m, cfg.subcritical_p
    with checks.guard('subcritical.ks'):
        batch = _limit_batch(cfg, m, p, cfg.subcritical_n, cfg.seed)
        rescaled = asymptotics.rescale(batch.clumsy.sorted_samples, m, p, Regime.subcritical())
        _ks_limit_check(checks, 'subcritical.ks', rescaled, asymptotics.gumbel_cdf,
                        cfg.subcritical_threshold, f"(T - m ln m)/m against Gumbel, m={m}, p={p}")
        expected = float(exact.mean_closed(ModelParams(m, p)))
        checks.add('subcritical.mean', expected, batch.clumsy.mean, analyzer.se_band * batch.clumsy.standard_error,
                   analyzer.within_standard_errors(
                       batch.clumsy.mean, expected, batch.clumsy.standard_error))


def _suite_supercritical(cfg, checks):
    m, p = cfg.supercritical_m, cfg.supercritical_p
    with checks.guard('supercritical.ks'):
        batch = _limit_batch(cfg, m, p, cfg.supercritical_n, cfg.seed)
        rescaled = asymptotics.rescale(batch.clumsy.sorted_samples, m, p, Regime.supercritical())
        _ks_limit_check(checks, 'supercritical.ks', rescaled, asymptotics.exponential_cdf,
                        cfg.supercritical_threshold,
                        f"p(1-p)^m (T - m ln m) against Exp(1), m={m}, p={p}; "
                        f"finite-m KS bias about {cfg.supercritical_bias}")


def _suite_critical(cfg, checks):
    c, m = cfg.critical_c, cfg.critical_m
    p = c / m
    with checks.guard('critical.ks_two_sample'):
        batch = _limit_batch(cfg, m, p, cfg.critical_n, cfg.seed)
        rescaled = asymptotics.rescale(batch.clumsy.sorted_samples, m, p, Regime.critical(c))
        limit = simulation_core.limit_law_values(Regime.critical(c), cfg.critical_n, cfg.seed + 1,
                                                 workers=cfg.workers)
        result = analyzer.ks_two_sample(rescaled, limit, threshold=cfg.critical_threshold)
        checks.add('critical.ks_two_sample', f"< {cfg.critical_threshold}", result.statistic,
                   cfg.critical_threshold, result.passed,
                   f"(T - m ln m)/m against sampled G + tau_c, m={m}, c={c}")
        for t in cfg.critical_t:
            check_id = f"critical.mgf.t{t}"
            with checks.guard(check_id):
                estimate, se = analyzer.exp_moment(rescaled, t)
                expected = asymptotics.critical_limit_mgf(c, t, cfg.rel_tol)
                checks.add(check_id, expected, estimate, analyzer.se_band * se,
                           analyzer.within_standard_errors(estimate, expected, se))


def _suite_tau(cfg, checks):
    with checks.guard('tau.laplace.c1.s1'):
        checks.close('tau.laplace.c1.s1', 1.0 / (math.e - 1.0),
                     asymptotics.tau_c_laplace(1.0, 1.0, cfg.rel_tol), abs_tol=1e-6)
    for index, c in enumerate(cfg.tau_c):
        values = None
        with checks.guard(f"tau.batch.c{c}"):
            values = simulation_core.simulate_tau_values(BirthDeathSpec(c), cfg.tau_n,
                                                         cfg.seed + index, workers=cfg.workers)
        for s in cfg.tau_s:
            check_id = f"tau.series.c{c}.s{s}"
            with checks.guard(check_id):
                checks.close(check_id, asymptotics.tau_c_laplace_series(c, s),
                             asymptotics.tau_c_laplace(c, s, cfg.rel_tol), rel_tol=1e-8)
            if values is None:
                continue
            check_id = f"tau.mc.c{c}.s{s}"
            with checks.guard(check_id):
                estimate, se = analyzer.exp_moment(values, -s)
                expected = asymptotics.tau_c_laplace(c, s, cfg.rel_tol)
                checks.add(check_id, expected, estimate, analyzer.se_band * se,
                           analyzer.within_standard_errors(estimate, expected, se))


def _decreasing(values):
    return all(later < earlier for earlier, later in zip(values, values[1:]))


def _suite_expansion(cfg, checks):
    p = Fraction(1, 2)
    for m in cfg.expansion_m:
        params = ModelParams(m, p)
        p_float = float(p)
        lead = (1 - p_float) ** (-m) / p_float
        check_id = f"expansion.fixed_p.mean.m{m}"
        with checks.guard(check_id):
            _, a1, a2 = asymptotics.fixed_p_mean_coefficients(p_float)
            excess = float(exact.mean_closed(params) - exact.mean_closed(ModelParams(m, 0)))
            residual = excess - lead * (1 + a1 / m + a2 / m ** 2)
            scaled = abs(residual) * m ** 3 / lead
            checks.add(check_id, f"<= {cfg.expansion_mean_bound}", scaled, cfg.expansion_mean_bound,
                       scaled <= cfg.expansion_mean_bound, '|residual| m^3 / leading term')
        check_id = f"expansion.fixed_p.variance.m{m}"
        with checks.guard(check_id):
            _, b1, b2 = asymptotics.fixed_p_variance_coefficients(p_float)
            excess = float(exact.variance_closed(params) - exact.var_classical(m))
            residual = excess - lead ** 2 * (1 + b1 / m + b2 / m ** 2)
            scaled = abs(residual) * m ** 3 / lead ** 2
            checks.add(check_id, f"<= {cfg.expansion_variance_bound}", scaled,
                       cfg.expansion_variance_bound, scaled <= cfg.expansion_variance_bound,
                       '|residual| m^3 / leading term squared')

    for p_text in cfg.expansion_ratio_p:
        check_id = f"expansion.fixed_p.ratio.p{p_text}"
        with checks.guard(check_id):
            p_float = float(Fraction(p_text))
            gaps = []
            for m in (cfg.expansion_m[0], cfg.expansion_m[-1]):
                params = ModelParams(m, Fraction(p_text))
                excess = float(exact.mean_closed(params) - exact.mean_closed(ModelParams(m, 0)))
                _, a1, a2 = asymptotics.fixed_p_mean_coefficients(p_float)
                series = (1 - p_float) ** (-m) / p_float * (1 + a1 / m + a2 / m ** 2)
                gaps.append(abs(excess / series - 1))
            checks.add(check_id, 'decreasing', gaps, None, _decreasing(gaps),
                       '|ratio - 1| at the smallest and largest m')

    c = cfg.critical_c
    mean_gaps, variance_gaps = [], []
    with checks.guard('expansion.critical.mean'):
        for m in cfg.critical_study_m:
            params = ModelParams(m, c / m)
            regime = Regime.critical(c)
            mean_gaps.append(abs(float(exact.mean_closed(params))
                                 - asymptotics.mean_asymptotic(params, regime, cfg.rel_tol)) / m)
            variance_gaps.append(abs(float(exact.variance_closed(params))
                                     - asymptotics.variance_asymptotic(params, regime, cfg.rel_tol)) / m ** 2)
        checks.add('expansion.critical.mean', 'decreasing', mean_gaps, None, _decreasing(mean_gaps),
                   '|mean_closed - mean_asymptotic| / m')
        checks.add('expansion.critical.variance', 'decreasing', variance_gaps, None,
                   _decreasing(variance_gaps), '|variance_closed - variance_asymptotic| / m^2')

    for c in cfg.critical_consistency_c:
        for t in (-0.5, -1.0):
            check_id = f"expansion.critical_consistency.c{c}.t{t}"
            with checks.guard(check_id):
                target = asymptotics.tau_c_laplace(c, -t, cfg.rel_tol)
                gaps = [abs(asymptotics.i_extra(ModelParams(m, c / m), t / m, cfg.rel_tol) - target)
                        for m in cfg.critical_consistency_m]
                checks.add(check_id, 'decreasing', gaps, None, _decreasing(gaps),
                           'I_extra(m, c/m, t/m) against the tau_c Laplace transform at -t')

    with checks.guard('expansion.classical_limit'):
        deviations = [abs(asymptotics.classical_mgf_limit_check(10 ** k, -1.0) - asymptotics.gumbel_mgf(-1.0))
                      for k in cfg.classical_limit_k]
        checks.add('expansion.classical_limit', 'decreasing', deviations, cfg.classical_limit_tol,
                   _decreasing(deviations) and deviations[-1] < cfg.classical_limit_tol,
                   'm^{-t} E e^{(t/m) T_0} against Gamma(1 - t) at t = -1')


def _suite_language(cfg, checks):
    order = cfg.language_max_length
    for m in cfg.language_m:
        for p in cfg.language_p:
            params = _params(m, p)
            pairs = (('H', langgf.ogf_h(params)), ('G', langgf.ogf_g(params)))
            for name, gf in pairs:
                check_id = f"language.words.{name}.m{m}.p{p}"
                with checks.guard(check_id):
                    brute = langgf.enumerate_language_weights(params, name, order)
                    coefficients = list(gf.series(order).coeffs)
                    checks.add(check_id, 'identical', 'identical' if brute == coefficients else 'differs',
                               0, brute == coefficients)
            check_id = f"language.words.J.m{m}.p{p}"
            with checks.guard(check_id):
                brute = langgf.enumerate_language_weights(params, 'J', order)
                probs = list(exact.pmf_series(params, max(order, m)).probs[:order + 1])
                checks.add(check_id, 'identical', 'identical' if brute == probs else 'differs',
                           0, brute == probs, 'first-collection words against the pmf')
            check_id = f"language.factorization.m{m}.p{p}"
            with checks.guard(check_id):
                length = max(order, m) + 10
                h_coeffs = langgf.ogf_h(params).series(length)
                g_coeffs = langgf.ogf_g(params).series(length)
                j_coeffs = langgf.FormalSeries(exact.pmf_markov(params, length).probs)
                product = j_coeffs.cauchy(g_coeffs)
                mismatch = next((n for n in range(length + 1) if product[n] != h_coeffs[n]), None)
                checks.add(check_id, 'identical', 'identical' if mismatch is None else f"n={mismatch}",
                           0, mismatch is None, 'ogf_H against pmf(J) times ogf_G')

    for m in (1, 2, 3):
        params = ModelParams(m, 0.25)
        for name, egf, ogf in (('H', langgf.egf_h(params), langgf.ogf_h(params)),
                               ('G', langgf.egf_g(params), langgf.ogf_g(params))):
            for x in cfg.language_x:
                check_id = f"language.laplace_borel.{name}.m{m}.x{x}"
                with checks.guard(check_id):
                    numeric = langgf.laplace_borel(egf, x, cfg.rel_tol)
                    checks.close(check_id, float(ogf.evaluate(x)), numeric, rel_tol=cfg.language_tol)


SUITES = {
    'oracle': _suite_oracle,
    'moments': _suite_moments,
    'mgf': _suite_mgf,
    'tail': _suite_tail,
    'independence': _suite_independence,
    'subcritical': _suite_subcritical,
    'supercritical': _suite_supercritical,
    'critical': _suite_critical,
    'tau': _suite_tau,
    'expansion': _suite_expansion,
    'language': _suite_language,
}

# result -> (suite, prefix of the check ids that exercise it)
COVERAGE_MANIFEST = {
    'exact_pmf_two_routes': ('oracle', 'oracle.exact'),
    'tail_generating_function': ('oracle', 'oracle.tail_gf'),
    'mean_closed_form': ('moments', 'moments.mean'),
    'variance_closed_form': ('moments', 'moments.variance'),
    'moment_integrals': ('moments', 'moments.decomposition'),
    'moments_increase_in_m': ('moments', 'moments.increasing_m'),
    'moments_increase_in_p': ('moments', 'moments.increasing_p'),
    'mean_convex_in_p': ('moments', 'moments.convex_p'),
    'mgf_factorization': ('mgf', 'mgf.pgf_route'),
    'mgf_deep_negative_t': ('mgf', 'mgf.deep_t'),
    'coupling_independence': ('independence', 'independence.correlation'),
    'coupling_marginals': ('independence', 'independence.coupling_marginal'),
    'subcritical_gumbel_limit': ('subcritical', 'subcritical.ks'),
    'supercritical_exponential_limit': ('supercritical', 'supercritical.ks'),
    'critical_gumbel_plus_tau_limit': ('critical', 'critical.ks_two_sample'),
    'birth_death_laplace_transform': ('tau', 'tau.mc'),
    'classical_mgf_convergence': ('expansion', 'expansion.classical_limit'),
    'mean_expansion': ('expansion', 'expansion.fixed_p.mean'),
    'variance_expansion': ('expansion', 'expansion.fixed_p.variance'),
    'tail_bound': ('tail', 'tail.bound'),
    'language_calculus': ('language', 'language.words'),
    'language_factorization': ('language', 'language.factorization'),
    'laplace_borel_transform': ('language', 'language.laplace_borel'),
}


def suite_names():
    return list(SUITES)


def run_suite(name, cfg=None):
    """
    Run one suite and assemble its Report.

    Parameters:
    -----------
    name : str
        One of SUITES
    cfg : HarnessConfig, optional
        Sizes, seeds and tolerances; defaults reproduce the acceptance runs

    Returns:
    --------
    Report
        Deterministic given cfg, apart from elapsed_seconds
    """
    if name not in SUITES:
        raise ParameterError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    cfg = cfg or HarnessConfig()
    checks = _Checks(name)
    logger.info(f"Running suite {name} (seed {cfg.seed})")
    start = time.perf_counter()
    SUITES[name](cfg, checks)
    elapsed = time.perf_counter() - start
    if not checks.results:
        checks.add(f"{name}.nonempty", 'at least one check', 0, None, False)
    report = Report(suite=name, checks=checks.results, environment={
        'version': config.VERSION,
        'seed': cfg.seed,
        'rel_tol': cfg.rel_tol,
        'numpy': np.__version__,
        'elapsed_seconds': round(elapsed, 3),
    })
    logger.info(f"Suite {name}: {'pass' if report.passed else 'FAIL'} "
                f"({len(checks.results) - len(report.failures)}/{len(checks.results)} checks, "
                f"{elapsed:.1f}s)")
    return report


def run_suites(names, cfg=None):
    names = suite_names() if names in ('all', ['all']) else list(names)
    return [run_suite(name, cfg) for name in names]


def uncovered_results(reports):
    """Manifest keys whose suite ran but emitted no check with the expected prefix"""
    emitted = {report.suite: [check.check_id for check in report.checks] for report in reports}
    missing = []
    for key, (suite, prefix) in COVERAGE_MANIFEST.items():
        if suite in emitted and not any(check_id.startswith(prefix) for check_id in emitted[suite]):
            missing.append(key)
    return missing


def reports_to_json(reports, indent=2):
    """One structured document for all reports of an invocation"""
    return json.dumps({
        'pass': all(report.passed for report in reports),
        'reports': [report.to_dict() for report in reports],
    }, indent=indent)


def reports_to_frame(reports):
    frames = [report.to_frame() for report in reports]
    return pd.concat(frames, ignore_index=True) if frames else pd.DataFrame()
