"""
Tests for the verification harness, run on reduced configurations
"""
import json

import pytest

import harness
from errors import ParameterError
from harness import HarnessConfig
from models import CheckResult, Report

SMALL = HarnessConfig(
    oracle_m=(1, 2, 3),
    oracle_p=('0', '1/2'),
    oracle_n_max=40,
    mgf_m=(1, 2, 3),
    mgf_p=(0.5,),
    mgf_t=(-1.0, -0.1),
    tail_m=(1, 2),
    tail_p=(0.5,),
    independence_n=300,
    coupling_m=(1,),
    coupling_p=(0.5,),
    coupling_n=300,
    tau_c=(1.0,),
    tau_s=(1.0,),
    tau_n=500,
    language_m=(1, 2),
    language_p=('1/2',),
    language_max_length=4,
    language_x=(0.5,),
)


class TestHarnessConfig:
    """Overrides from the command line"""

    def test_overrides_from_strings(self):
        cfg = HarnessConfig.from_overrides(['seed=5', 'oracle_m=1, 2', 'workers=2', 'alpha=0.01',
                                            'oracle_p=1/3,1/2'])
        assert cfg.seed == 5
        assert cfg.oracle_m == (1, 2)
        assert cfg.workers == 2
        assert cfg.alpha == 0.01
        assert cfg.oracle_p == ('1/3', '1/2')

    def test_overrides_from_mapping(self):
        cfg = HarnessConfig.from_overrides({'tau_n': '1000', 'tau_c': (2.0,)})
        assert cfg.tau_n == 1000
        assert cfg.tau_c == (2.0,)

    def test_bad_overrides(self):
        with pytest.raises(ParameterError):
            HarnessConfig.from_overrides(['no_such_setting=1'])
        with pytest.raises(ParameterError):
            HarnessConfig.from_overrides(['seed'])

    def test_to_dict_lists_tuples(self):
        data = SMALL.to_dict()
        assert data['oracle_m'] == [1, 2, 3]
        assert data['seed'] == 1


class TestSuites:
    """Suites pass on small deterministic inputs"""

    @pytest.mark.parametrize('name', ['oracle', 'moments', 'mgf', 'tail', 'language'])
    def test_deterministic_suites_pass(self, name):
        report = harness.run_suite(name, SMALL)
        assert report.passed, [check.to_dict() for check in report.failures]
        assert report.environment['seed'] == 1
        assert 'elapsed_seconds' in report.environment

    def test_known_values_are_checked(self):
        report = harness.run_suite('moments', SMALL)
        ids = {check.check_id for check in report.checks}
        assert 'moments.variance.m2.p1/2' in ids
        assert 'moments.decomposition.m3.p0.2' in ids

    def test_shape_and_factorization_checks_present(self):
        """Monotonicity, convexity, deep-t and factorization checks are reported"""
        moments = {check.check_id for check in harness.run_suite('moments', SMALL).checks}
        assert 'moments.increasing_m.mean.p0' in moments
        assert 'moments.increasing_p.variance.m7' in moments
        assert 'moments.convex_p.mean.m3' in moments
        mgf = {check.check_id for check in harness.run_suite('mgf', SMALL).checks}
        assert 'mgf.deep_t.m1.p0.5.t-20.0' in mgf
        assert not any(check_id.startswith('mgf.factorization') for check_id in mgf)
        language = {check.check_id for check in harness.run_suite('language', SMALL).checks}
        assert 'language.factorization.m1.p1/2' in language

    def test_exceptions_become_failed_checks(self):
        """A check that raises is reported, not propagated"""
        report = harness.run_suite('oracle', SMALL.with_overrides(oracle_m=(0,)))
        assert not report.passed
        failed = report.failures[0]
        assert failed.check_id == 'oracle.exact.m0.p0'
        assert failed.detail.startswith('ParameterError')

    def test_monte_carlo_suites_are_reproducible(self):
        """Same configuration, same report content"""
        first = harness.run_suite('independence', SMALL)
        second = harness.run_suite('independence', SMALL)
        assert first.content() == second.content()
        ids = [check.check_id for check in first.checks]
        assert 'independence.correlation' in ids
        assert 'independence.coupling_marginal.m1.p0.5' in ids

    def test_tau_suite_structure(self):
        report = harness.run_suite('tau', SMALL)
        ids = [check.check_id for check in report.checks]
        assert ids == ['tau.laplace.c1.s1', 'tau.series.c1.0.s1.0', 'tau.mc.c1.0.s1.0']
        assert report.checks[0].passed and report.checks[1].passed

    def test_unknown_suite(self):
        with pytest.raises(ParameterError):
            harness.run_suite('nonsense', SMALL)


class TestReporting:
    """Coverage manifest and report serialisation"""

    def test_manifest_refers_to_real_suites(self):
        assert set(suite for suite, _ in harness.COVERAGE_MANIFEST.values()) <= set(harness.SUITES)
        assert harness.suite_names() == list(harness.SUITES)

    def test_uncovered_results(self):
        full = harness.run_suite('oracle', SMALL)
        assert harness.uncovered_results([full]) == []
        bare = Report('oracle', [CheckResult('oracle.other', 0, 0, 0, True)])
        assert sorted(harness.uncovered_results([bare])) == ['exact_pmf_two_routes', 'tail_generating_function']

    def test_json_and_frame(self):
        reports = harness.run_suites(['tail'], SMALL)
        document = json.loads(harness.reports_to_json(reports))
        assert document['pass'] is True
        assert document['reports'][0]['suite'] == 'tail'
        frame = harness.reports_to_frame(reports)
        assert len(frame) == len(reports[0].checks)
        assert frame['pass'].all()
