"""
Statistical analysis of Monte Carlo output
Kolmogorov-Smirnov distances, chi-square goodness-of-fit and independence
tests, Monte Carlo standard errors and descriptive tables
"""

import math

import numpy as np
import pandas as pd
import scipy.stats as stats

from errors import ParameterError
from models import KsResult
from utils.logger import get_module_logger

logger = get_module_logger('statistics')

# Asymptotic one-sample Kolmogorov quantile at alpha = 0.01
KS_QUANTILE_01 = 1.63
MIN_EXPECTED_COUNT = 5.0
STANDARD_ERROR_BAND = 4.0


def _merge_bins(observed, expected, min_expected):
    """Merge adjacent bins left to right until every expected count reaches min_expected"""
    merged_obs, merged_exp = [], []
    acc_obs = acc_exp = 0.0
    for obs, exp in zip(observed, expected):
        acc_obs += obs
        acc_exp += exp
        if acc_exp >= min_expected:
            merged_obs.append(acc_obs)
            merged_exp.append(acc_exp)
            acc_obs = acc_exp = 0.0
    if acc_exp > 0 or acc_obs > 0:
        if merged_exp:
            merged_obs[-1] += acc_obs
            merged_exp[-1] += acc_exp
        else:
            merged_obs.append(acc_obs)
            merged_exp.append(acc_exp)
    return np.array(merged_obs), np.array(merged_exp)


class StatisticalAnalyzer:
    """
    Goodness-of-fit and error-band computations for simulated collection
    times, sharing one set of pass criteria
    """

    def __init__(self, ks_quantile=KS_QUANTILE_01, se_band=STANDARD_ERROR_BAND,
                 min_expected=MIN_EXPECTED_COUNT):
        """
        Parameters:
        -----------
        ks_quantile : float
            Kolmogorov quantile c in the default KS threshold c / sqrt(n)
        se_band : float
            Width, in standard errors, of the Monte Carlo acceptance band
        min_expected : float
            Chi-square bins are merged until each expects this many counts
        """
        if ks_quantile <= 0 or se_band <= 0 or min_expected <= 0:
            raise ParameterError("analyzer settings must be positive")
        self.ks_quantile = ks_quantile
        self.se_band = se_band
        self.min_expected = min_expected

    def ks_threshold(self, n, n2=None, bias_allowance=0.0):
        """c / sqrt(n), or the two-sample analogue, plus a finite-size allowance"""
        if n2 is None:
            return self.ks_quantile / math.sqrt(n) + bias_allowance
        return self.ks_quantile * math.sqrt((n + n2) / (n * n2)) + bias_allowance

    def ks_one_sample(self, sorted_samples, cdf, threshold=None, bias_allowance=0.0):
        """
        One-sample Kolmogorov-Smirnov distance to a continuous distribution function

        Parameters:
        -----------
        sorted_samples : array-like
            Nondecreasing sample
        cdf : callable
            Vectorised distribution function
        threshold : float, optional
            Pass threshold; defaults to ks_threshold(n) + bias_allowance

        Returns:
        --------
        KsResult
            sup_i max(i/n - F(x_i), F(x_i) - (i-1)/n)
        """
        x = np.asarray(sorted_samples, dtype=float)
        n = x.size
        if n == 0:
            raise ParameterError("KS statistic of an empty sample")
        if np.any(np.diff(x) < 0):
            raise ParameterError("ks_one_sample expects sorted samples")
        fitted = np.asarray(cdf(x), dtype=float)
        d_plus = np.max(np.arange(1, n + 1) / n - fitted)
        d_minus = np.max(fitted - np.arange(0, n) / n)
        statistic = float(max(d_plus, d_minus))
        threshold = self.ks_threshold(n, bias_allowance=bias_allowance) if threshold is None else threshold
        return KsResult(statistic=statistic, n=n, threshold=threshold,
                        p_value=float(stats.kstwo.sf(statistic, n)))

    def ks_two_sample(self, a, b, threshold=None, bias_allowance=0.0):
        """Two-sample Kolmogorov-Smirnov distance between empirical distribution functions"""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if a.size == 0 or b.size == 0:
            raise ParameterError("KS statistic of an empty sample")
        method = 'asymp' if a.size * b.size > 10 ** 6 else 'auto'
        result = stats.ks_2samp(a, b, method=method)
        if threshold is None:
            threshold = self.ks_threshold(a.size, b.size, bias_allowance)
        return KsResult(statistic=float(result.statistic), n=int(a.size), n2=int(b.size),
                        threshold=threshold, p_value=float(result.pvalue))

    @staticmethod
    def mean_with_se(values):
        """Sample mean and its standard error"""
        values = np.asarray(values, dtype=float)
        if values.size < 2:
            raise ParameterError("a standard error needs at least two samples")
        return float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.size))

    def exp_moment(self, values, t):
        """Monte Carlo estimate of E e^{tX} with its standard error"""
        return self.mean_with_se(np.exp(t * np.asarray(values, dtype=float)))

    @staticmethod
    def variance_standard_error(values):
        """Large-sample standard error of the sample variance, sqrt((mu4 - sigma^4) / n)"""
        values = np.asarray(values, dtype=float)
        centred = values - values.mean()
        variance = np.mean(centred ** 2)
        fourth = np.mean(centred ** 4)
        return float(math.sqrt(max(fourth - variance ** 2, 0.0) / values.size))

    def within_standard_errors(self, estimate, target, standard_error, k=None):
        k = self.se_band if k is None else k
        return abs(estimate - target) <= k * standard_error

    @staticmethod
    def correlation(x, y):
        """Pearson correlation; 0 when either sample is constant"""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.std() == 0 or y.std() == 0:
            return 0.0
        return float(np.corrcoef(x, y)[0, 1])

    def chi_square_pmf_test(self, samples, probs, min_expected=None):
        """
        Chi-square goodness of fit of integer samples against a truncated pmf

        Parameters:
        -----------
        samples : array-like of int
        probs : sequence
            probs[k] = P(X = k) for k = 0..n_max; the remaining mass forms an
            overflow bin
        min_expected : float, optional
            Overrides the analyzer's minimum expected count per merged bin

        Returns:
        --------
        tuple
            (statistic, p_value, degrees_of_freedom)
        """
        min_expected = self.min_expected if min_expected is None else min_expected
        samples = np.asarray(samples, dtype=np.int64)
        n = samples.size
        probs = np.asarray([float(prob) for prob in probs], dtype=float)
        n_max = probs.size - 1
        counts = np.bincount(np.minimum(samples, n_max + 1), minlength=n_max + 2).astype(float)
        expected_probs = np.append(probs, max(1.0 - probs.sum(), 0.0))
        observed, expected = _merge_bins(counts, n * expected_probs, min_expected)
        if observed.size < 2:
            raise ParameterError("chi-square test needs at least two bins after merging")
        expected *= observed.sum() / expected.sum()
        statistic, p_value = stats.chisquare(observed, expected)
        logger.debug(f"chi-square fit: {observed.size} bins, statistic {statistic:.4g}")
        return float(statistic), float(p_value), int(observed.size - 1)

    @staticmethod
    def independence_test(x, y, n_bins=4):
        """
        Chi-square test of independence on quantile buckets of x and y.

        Ties are broken by sample order, which is independent of the values.

        Returns:
        --------
        tuple
            (statistic, p_value, degrees_of_freedom)
        """
        x = pd.Series(np.asarray(x))
        y = pd.Series(np.asarray(y))
        x_bucket = pd.qcut(x.rank(method='first'), n_bins, labels=False)
        y_bucket = pd.qcut(y.rank(method='first'), n_bins, labels=False)
        table = pd.crosstab(x_bucket, y_bucket)
        statistic, p_value, dof, _ = stats.chi2_contingency(table.to_numpy())
        return float(statistic), float(p_value), int(dof)

    @staticmethod
    def describe(frame, columns=None):
        """Descriptive statistics of the numeric columns of a sample table"""
        if columns is None:
            columns = frame.select_dtypes(include=[np.number]).columns
        table = frame[columns].describe().T
        table['sem'] = frame[columns].sem()
        return table

    @staticmethod
    def quantile_pairs(samples, quantile, n_points=None):
        """
        Empirical quantiles of a rescaled sample next to limit-law quantiles
        at the levels (i - 1/2)/n.

        Returns:
        --------
        pandas.DataFrame
            Columns level, sample_quantile, limit_quantile
        """
        values = np.sort(np.asarray(samples, dtype=float))
        n = values.size
        if n == 0:
            raise ParameterError("quantile pairs of an empty sample")
        if n_points is not None and n_points < n:
            index = np.unique(np.linspace(0, n - 1, n_points).round().astype(int))
        else:
            index = np.arange(n)
        levels = (index + 0.5) / n
        return pd.DataFrame({
            'level': levels,
            'sample_quantile': values[index],
            'limit_quantile': np.asarray(quantile(levels), dtype=float),
        })
