"""
Clumsy Coupon Collector - command line front end

Usage: python main.py <subcommand> [options]
Subcommands: pmf, moments, mgf, tail, simulate, tau, limit, expand, verify
"""
import argparse
import json
import math
import shlex
import sys

import numpy as np
import pandas as pd

import asymptotics
import config
import exact
import harness
import simulation_core
from errors import ClumsyCollectorError, ParameterError
from models import BirthDeathSpec, ModelParams, Regime, RegimeTag, format_scalar, parse_probability
from statistical_analysis import StatisticalAnalyzer
from utils.logger import get_module_logger, log_exception, set_level

logger = get_module_logger('cli')
analyzer = StatisticalAnalyzer()

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


class _UsageError(Exception):
    """argparse problems, reported with exit code 2"""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}")


def _float_list(text):
    try:
        return [float(part) for part in text.split(',') if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _common_options():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, default=1, help='master seed of the random streams')
    common.add_argument('--threads', type=int, default=config.DEFAULT_THREADS,
                        help='worker processes for Monte Carlo batches (env CLUMSY_THREADS)')
    common.add_argument('--format', choices=['csv', 'structured'], default='csv', dest='output_format')
    common.add_argument('--output', default=None, help='output file (default stdout)')
    common.add_argument('--rel-tol', type=float, default=config.DEFAULT_REL_TOL)
    common.add_argument('--log-level', default=None, help='DEBUG, INFO, WARNING or ERROR')
    return common


def _model_options(parser):
    parser.add_argument('--m', type=int, required=True, help='number of coupon types')
    parser.add_argument('--p', default=None,
                        help='clumsiness probability, decimal or rational "a/b"')
    parser.add_argument('--c', type=float, default=None,
                        help='critical preset: p = c/m when --p is omitted')


def build_parser():
    common = _common_options()
    parser = _Parser(prog='clumsy-collector', description='Exact law, simulation and asymptotics '
                     'of the clumsy coupon collector')
    subparsers = parser.add_subparsers(dest='command', required=True, parser_class=_Parser)

    pmf = subparsers.add_parser('pmf', parents=[common], help='probability mass function')
    _model_options(pmf)
    pmf.add_argument('--n-max', type=int, required=True)
    pmf.add_argument('--method', choices=['series', 'markov'], default='series')

    moments = subparsers.add_parser('moments', parents=[common], help='closed-form mean and variance')
    _model_options(moments)
    moments.add_argument('--n-max', type=int, default=200, help='truncation of the pmf cross-check')

    mgf = subparsers.add_parser('mgf', parents=[common], help='moment generating function on a t grid')
    _model_options(mgf)
    mgf.add_argument('--t', type=_float_list, default=None, help='comma-separated t <= 0')
    mgf.add_argument('--t-min', type=float, default=-2.0)
    mgf.add_argument('--t-steps', type=int, default=9)

    tail = subparsers.add_parser('tail', parents=[common], help='exact tail and its MGF bound')
    _model_options(tail)
    tail.add_argument('--r', type=_float_list, default=None, help='radii (default m, 2m, 10m)')

    simulate = subparsers.add_parser('simulate', parents=[common], help='coupled Monte Carlo batch')
    _model_options(simulate)
    simulate.add_argument('--samples', type=int, required=True)
    simulate.add_argument('--raw', action='store_true', help='write raw (t_classical, t_clumsy) pairs')

    tau = subparsers.add_parser('tau', parents=[common], help='birth-death hitting time tau_c')
    tau.add_argument('--c', type=float, required=True)
    tau.add_argument('--samples', type=int, default=10_000)
    tau.add_argument('--s', type=_float_list, default=[0.5, 1.0, 2.0])
    tau.add_argument('--q0', type=int, default=None, help='fixed initial state')

    limit = subparsers.add_parser('limit', parents=[common], help='rescaled sample against a limit law')
    _model_options(limit)
    limit.add_argument('--regime', choices=['subcritical', 'critical', 'supercritical'], required=True)
    limit.add_argument('--samples', type=int, default=10_000)
    limit.add_argument('--points', type=int, default=200, help='quantile pairs to emit')

    expand = subparsers.add_parser('expand', parents=[common], help='asymptotic series next to exact values')
    _model_options(expand)
    expand.add_argument('--regime', choices=[tag.value for tag in RegimeTag], required=True)

    verify = subparsers.add_parser('verify', parents=[common], help='run verification suites')
    verify.add_argument('--suite', choices=harness.suite_names() + ['all'], default='all')
    verify.add_argument('--set', action='append', default=[], metavar='KEY=VALUE',
                        help='override a harness setting, e.g. subcritical_n=2000')
    return parser


def _resolve_params(args):
    """ModelParams from --m/--p, or from the --c preset p = c/m"""
    if args.p is None:
        if getattr(args, 'c', None) is None:
            raise ParameterError("give --p, or --c for the preset p = c/m")
        return ModelParams(args.m, args.c / args.m)
    return ModelParams(args.m, parse_probability(args.p))


def _regime(args):
    tag = RegimeTag(args.regime)
    if tag is RegimeTag.CRITICAL:
        c = args.c if args.c is not None else args.m * float(parse_probability(args.p))
        return Regime.critical(c)
    return Regime(tag)


def _provenance(argv, args, mode=None):
    line = f"# clumsy-collector {config.VERSION} argv={shlex.join(argv)} seed={args.seed}"
    if mode is not None:
        line += f" mode={mode}"
    return line


def _emit(args, argv, frame, mode=None, extra=None):
    """Write a table as CSV (provenance comment first) or as one structured document"""
    header = _provenance(argv, args, mode)
    if args.output_format == 'structured':
        document = {'provenance': header[2:], 'rows': json.loads(frame.to_json(orient='records'))}
        if extra:
            document.update(extra)
        text = json.dumps(document, indent=2) + '\n'
    else:
        text = header + '\n' + frame.to_csv(index=False, lineterminator='\n')
    if args.output:
        with open(args.output, 'w', encoding='utf-8', newline='\n') as handle:
            handle.write(text)
        logger.info(f"Wrote {len(frame)} rows to {args.output}")
    else:
        sys.stdout.write(text)


def _decimal(value):
    return repr(exact.to_float(value))


def cmd_pmf(args, argv):
    params = _resolve_params(args)
    method = exact.pmf_series if args.method == 'series' else exact.pmf_markov
    pmf = method(params, args.n_max)
    frame = pmf.to_frame()
    frame['probability_decimal'] = [_decimal(v) for v in pmf.probs]
    frame = frame[frame['n'] >= params.m]
    _emit(args, argv, frame[['n', 'probability', 'probability_decimal', 'cumulative', 'tail_certificate']],
          params.mode, {'params': params.to_dict(), 'tail_mass': format_scalar(pmf.tail_mass)})
    return EXIT_OK


def cmd_moments(args, argv):
    params = _resolve_params(args)
    closed = exact.moments_closed(params)
    from_pmf = exact.moments_from_pmf(exact.pmf_markov(params, max(args.n_max, params.m)))
    frame = pd.DataFrame([closed.to_dict(), from_pmf.to_dict()])
    frame.insert(0, 'mean_decimal', [_decimal(closed.mean), _decimal(from_pmf.mean)])
    frame.insert(1, 'variance_decimal', [_decimal(closed.variance), _decimal(from_pmf.variance)])
    _emit(args, argv, frame, params.mode, {'params': params.to_dict()})
    return EXIT_OK


def cmd_mgf(args, argv):
    params = _resolve_params(args)
    grid = args.t if args.t is not None else np.linspace(args.t_min, 0.0, args.t_steps).tolist()
    rows = []
    for t in grid:
        rows.append({
            't': t,
            'mgf': exact.mgf_eval(params, t, args.rel_tol),
            'mgf_classical': exact.mgf_classical(params.m, t),
            'i_extra': exact.i_extra(params, t, args.rel_tol),
        })
    _emit(args, argv, pd.DataFrame(rows), params.mode)
    return EXIT_OK


def cmd_tail(args, argv):
    params = _resolve_params(args)
    radii = args.r if args.r is not None else [params.m, 2 * params.m, 10 * params.m]
    pmf = exact.pmf_markov(params, max(params.m, int(math.ceil(max(radii)))))
    rows = []
    for r in radii:
        exact_tail = exact.tail_from_pmf(pmf, int(math.ceil(r)) - 1)
        rows.append({'r': r, 'exact_tail': _decimal(exact_tail),
                     'bound': asymptotics.tail_bound(params, r, args.rel_tol)})
    _emit(args, argv, pd.DataFrame(rows), params.mode)
    return EXIT_OK


def cmd_simulate(args, argv):
    params = _resolve_params(args)
    batch = simulation_core.simulate_batch(params, args.samples, args.seed, retain=args.raw,
                                           workers=args.threads)
    frame = batch.to_frame() if args.raw else batch.summary_frame()
    _emit(args, argv, frame, 'monte_carlo', {'summary': batch.to_dict()} if args.raw else None)
    return EXIT_OK


def cmd_tau(args, argv):
    spec = BirthDeathSpec(args.c, args.q0)
    values = simulation_core.simulate_tau_values(spec, args.samples, args.seed, workers=args.threads)
    rows = []
    for s in args.s:
        estimate, se = analyzer.exp_moment(values, -s)
        rows.append({'s': s, 'mc_estimate': estimate, 'mc_standard_error': se,
                     'laplace_transform': asymptotics.tau_c_laplace(args.c, s, args.rel_tol)
                     if args.q0 is None else float('nan')})
    mean, se = analyzer.mean_with_se(values)
    _emit(args, argv, pd.DataFrame(rows), 'monte_carlo',
          {'tau_mean': mean, 'tau_mean_standard_error': se})
    return EXIT_OK


def cmd_limit(args, argv):
    params = _resolve_params(args)
    regime = _regime(args)
    batch = simulation_core.simulate_batch(params, args.samples, args.seed, retain=True,
                                           workers=args.threads)
    rescaled = asymptotics.rescale(batch.clumsy.sorted_samples, params.m, params.p_float, regime)
    if regime.tag is RegimeTag.CRITICAL:
        reference = np.sort(simulation_core.limit_law_values(regime, args.samples, args.seed + 1,
                                                             workers=args.threads))
        ks = analyzer.ks_two_sample(rescaled, reference)

        def quantile(levels):
            return np.quantile(reference, levels)
    else:
        cdf, quantile = ((asymptotics.gumbel_cdf, asymptotics.gumbel_quantile)
                         if regime.tag is RegimeTag.SUBCRITICAL
                         else (asymptotics.exponential_cdf, asymptotics.exponential_quantile))
        ks = analyzer.ks_one_sample(rescaled, cdf)
    frame = analyzer.quantile_pairs(rescaled, quantile, args.points)
    logger.info(f"KS distance {ks.statistic:.4f} (threshold {ks.threshold:.4f})")
    _emit(args, argv, frame, 'monte_carlo', {'ks': ks.to_dict(), 'regime': regime.to_dict()})
    return EXIT_OK


def cmd_expand(args, argv):
    params = _resolve_params(args)
    regime = _regime(args)
    rows = [
        {'quantity': 'mean', 'exact': _decimal(exact.mean_closed(params)),
         'asymptotic': asymptotics.mean_asymptotic(params, regime, args.rel_tol)},
        {'quantity': 'variance', 'exact': _decimal(exact.variance_closed(params)),
         'asymptotic': asymptotics.variance_asymptotic(params, regime, args.rel_tol)},
    ]
    _emit(args, argv, pd.DataFrame(rows), params.mode, {'regime': regime.to_dict()})
    return EXIT_OK


def cmd_verify(args, argv):
    cfg = harness.HarnessConfig.from_overrides(args.set)
    cfg = cfg.with_overrides(seed=args.seed, workers=args.threads, rel_tol=args.rel_tol)
    reports = harness.run_suites([args.suite] if args.suite != 'all' else 'all', cfg)
    if args.output_format == 'structured':
        text = json.dumps({'provenance': _provenance(argv, args)[2:],
                           **json.loads(harness.reports_to_json(reports))}, indent=2) + '\n'
        if args.output:
            with open(args.output, 'w', encoding='utf-8', newline='\n') as handle:
                handle.write(text)
        else:
            sys.stdout.write(text)
    else:
        _emit(args, argv, harness.reports_to_frame(reports))
    return EXIT_OK if all(report.passed for report in reports) else EXIT_FAILURE


COMMANDS = {
    'pmf': cmd_pmf,
    'moments': cmd_moments,
    'mgf': cmd_mgf,
    'tail': cmd_tail,
    'simulate': cmd_simulate,
    'tau': cmd_tau,
    'limit': cmd_limit,
    'expand': cmd_expand,
    'verify': cmd_verify,
}


def dispatch(argv):
    """
    Parse argv (without the program name) and run the subcommand.

    Returns:
    --------
    int
        0 on success (for verify: all checks passed), 1 on numeric failure
        or failed checks, 2 on usage errors
    """
    argv = list(argv)
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as e:
        print(str(e), file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:  # --help
        return e.code if isinstance(e.code, int) else EXIT_OK
    if args.log_level:
        set_level(args.log_level)
    if args.threads < 1:
        print("--threads must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args, argv)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ClumsyCollectorError, ArithmeticError, MemoryError, RuntimeError) as e:
        message = log_exception(logger, e, f"running {args.command}")
        print(message, file=sys.stderr)
        return EXIT_FAILURE


if __name__ == '__main__':
    sys.exit(dispatch(sys.argv[1:]))
