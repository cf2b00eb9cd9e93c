"""
Test suite for statistical analysis functions
"""
import math

import numpy as np
import pandas as pd
import pytest
from scipy import stats

from errors import ParameterError
from statistical_analysis import KS_QUANTILE_01, StatisticalAnalyzer


@pytest.fixture
def analyzer():
    return StatisticalAnalyzer()


class TestAnalyzerSettings:
    """Test shared pass criteria"""

    def test_defaults(self, analyzer):
        assert analyzer.ks_quantile == KS_QUANTILE_01
        assert analyzer.se_band == 4.0
        assert analyzer.min_expected == 5.0

    def test_custom_band(self):
        """Test a narrower band rejects what the default accepts"""
        narrow = StatisticalAnalyzer(se_band=2.0)
        assert StatisticalAnalyzer().within_standard_errors(1.0, 1.3, 0.1)
        assert not narrow.within_standard_errors(1.0, 1.3, 0.1)

    def test_invalid_settings(self):
        with pytest.raises(ParameterError):
            StatisticalAnalyzer(se_band=0.0)
        with pytest.raises(ParameterError):
            StatisticalAnalyzer(ks_quantile=-1.0)


class TestKolmogorovSmirnov:
    """Test one- and two-sample KS distances"""

    def test_threshold(self, analyzer):
        assert analyzer.ks_threshold(100) == pytest.approx(0.163)
        assert analyzer.ks_threshold(100, bias_allowance=0.03) == pytest.approx(0.193)
        assert analyzer.ks_threshold(100, 100) == pytest.approx(KS_QUANTILE_01 * math.sqrt(0.02))
        assert StatisticalAnalyzer(ks_quantile=1.36).ks_threshold(100) == pytest.approx(0.136)

    def test_one_sample_matches_scipy(self, analyzer):
        """Test the statistic agrees with scipy.stats.kstest"""
        rng = np.random.default_rng(3)
        sample = np.sort(rng.normal(size=500))
        result = analyzer.ks_one_sample(sample, stats.norm.cdf)
        assert result.statistic == pytest.approx(stats.kstest(sample, 'norm').statistic, rel=1e-12)
        assert result.passed
        assert 0 < result.p_value <= 1

    def test_one_sample_detects_shift(self, analyzer):
        rng = np.random.default_rng(3)
        sample = np.sort(rng.normal(loc=1.0, size=2000))
        assert not analyzer.ks_one_sample(sample, stats.norm.cdf).passed

    def test_uniform_grid(self, analyzer):
        """Test the midpoint grid sits at distance 1/(2n) from the uniform law"""
        n = 10
        grid = (np.arange(n) + 0.5) / n
        result = analyzer.ks_one_sample(grid, lambda x: np.clip(x, 0.0, 1.0))
        assert result.statistic == pytest.approx(1.0 / (2 * n))

    def test_one_sample_needs_sorted_input(self, analyzer):
        with pytest.raises(ParameterError):
            analyzer.ks_one_sample([0.3, 0.1], stats.norm.cdf)
        with pytest.raises(ParameterError):
            analyzer.ks_one_sample([], stats.norm.cdf)

    def test_two_sample(self, analyzer):
        rng = np.random.default_rng(4)
        a, b = rng.exponential(size=800), rng.exponential(size=600)
        result = analyzer.ks_two_sample(a, b)
        assert result.statistic == pytest.approx(stats.ks_2samp(a, b).statistic)
        assert result.n == 800 and result.n2 == 600
        assert result.passed
        with pytest.raises(ParameterError):
            analyzer.ks_two_sample(a, [])


class TestStandardErrors:
    """Test Monte Carlo error estimates"""

    def test_mean_with_se(self, analyzer):
        mean, se = analyzer.mean_with_se([1.0, 2.0, 3.0, 4.0])
        assert mean == 2.5
        assert se == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2)
        with pytest.raises(ParameterError):
            analyzer.mean_with_se([1.0])

    def test_exp_moment(self, analyzer):
        """Test E e^{-X} for X exponential is 1/2"""
        rng = np.random.default_rng(8)
        estimate, se = analyzer.exp_moment(rng.exponential(size=20000), -1.0)
        assert analyzer.within_standard_errors(estimate, 0.5, se)

    def test_variance_standard_error(self, analyzer):
        """Test sqrt((mu4 - sigma^4)/n) = sqrt(2/n) for standard normals"""
        rng = np.random.default_rng(9)
        n = 40000
        assert analyzer.variance_standard_error(rng.normal(size=n)) == pytest.approx(math.sqrt(2.0 / n), rel=0.05)

    def test_within_standard_errors(self, analyzer):
        assert analyzer.within_standard_errors(1.0, 1.3, 0.1)
        assert not analyzer.within_standard_errors(1.0, 1.5, 0.1)
        assert analyzer.within_standard_errors(1.0, 1.5, 0.1, k=6.0)


class TestDependence:
    """Test correlation and independence"""

    def test_correlation(self, analyzer):
        x = np.arange(10.0)
        assert analyzer.correlation(x, 2 * x + 1) == pytest.approx(1.0)
        assert analyzer.correlation(x, np.ones(10)) == 0.0

    def test_independent_samples(self, analyzer):
        rng = np.random.default_rng(10)
        statistic, p_value, dof = analyzer.independence_test(rng.normal(size=4000), rng.normal(size=4000))
        assert dof == 9
        assert p_value > 1e-3

    def test_dependent_samples(self, analyzer):
        rng = np.random.default_rng(10)
        x = rng.normal(size=4000)
        _, p_value, _ = analyzer.independence_test(x, x + 0.5 * rng.normal(size=4000))
        assert p_value < 1e-6

    def test_ties_are_bucketed(self, analyzer):
        """Test heavily tied integer samples still fill every bucket"""
        rng = np.random.default_rng(2)
        _, _, dof = analyzer.independence_test(rng.integers(0, 3, size=1000), rng.integers(0, 3, size=1000),
                                               n_bins=4)
        assert dof == 9


class TestChiSquare:
    """Test goodness of fit against a truncated pmf"""

    def test_fitting_law(self, analyzer):
        rng = np.random.default_rng(5)
        samples = rng.geometric(0.5, size=5000)
        probs = [0.0] + [0.5 ** n for n in range(1, 15)]
        statistic, p_value, dof = analyzer.chi_square_pmf_test(samples, probs)
        assert p_value > 1e-3
        assert dof >= 5

    def test_wrong_law(self, analyzer):
        rng = np.random.default_rng(5)
        samples = rng.geometric(0.3, size=5000)
        probs = [0.0] + [0.5 ** n for n in range(1, 15)]
        assert analyzer.chi_square_pmf_test(samples, probs)[1] < 1e-6

    def test_too_few_bins(self, analyzer):
        with pytest.raises(ParameterError):
            analyzer.chi_square_pmf_test([1, 1, 1], [0.0, 1.0])


class TestTables:
    """Test descriptive tables"""

    def test_describe(self, analyzer):
        frame = pd.DataFrame({'t': [1.0, 2.0, 3.0], 'label': ['a', 'b', 'c']})
        table = analyzer.describe(frame)
        assert list(table.index) == ['t']
        assert table.loc['t', 'mean'] == 2.0
        assert table.loc['t', 'sem'] == pytest.approx(1.0 / math.sqrt(3))

    def test_quantile_pairs(self, analyzer):
        table = analyzer.quantile_pairs([3.0, 1.0, 2.0, 4.0], lambda u: u)
        assert table['sample_quantile'].tolist() == [1.0, 2.0, 3.0, 4.0]
        assert table['level'].tolist() == [0.125, 0.375, 0.625, 0.875]
        assert table['limit_quantile'].tolist() == table['level'].tolist()

    def test_quantile_pairs_thinned(self, analyzer):
        table = analyzer.quantile_pairs(np.arange(1000.0), lambda u: u, n_points=11)
        assert len(table) == 11
        assert table['sample_quantile'].iloc[-1] == 999.0
        with pytest.raises(ParameterError):
            analyzer.quantile_pairs([], lambda u: u)
