"""
Domain records for the clumsy coupon collector toolkit
Immutable value types shared by the exact, simulation, asymptotic and
harness layers, each with a to_dict() serialiser
"""
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

import config
from errors import ParameterError


def parse_probability(text):
    """
    Parse a clumsiness probability given on the command line or in a config.

    "a/b" strings become exact Fractions; decimal strings become floats.
    """
    if isinstance(text, (Fraction, float, int)) and not isinstance(text, bool):
        return text
    raw = str(text).strip()
    try:
        if '/' in raw:
            return Fraction(raw)
        return float(raw)
    except (ValueError, ZeroDivisionError):
        raise ParameterError(f"cannot parse probability {text!r}")


def format_scalar(value):
    """Round-trip text for a scalar: 'a/b' for rationals, shortest repr for floats"""
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _jsonable(value):
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    if value is None or isinstance(value, (bool, int, float, str)):
        return value
    # mpmath numbers and anything else numeric
    try:
        return float(value)
    except (TypeError, ValueError):
        return str(value)


@dataclass(frozen=True)
class ModelParams:
    """Number of coupon types m and clumsiness probability p"""
    m: int
    p: Any = Fraction(0)

    def __post_init__(self):
        if isinstance(self.m, bool) or not isinstance(self.m, (int, np.integer)):
            raise ParameterError(f"m must be an integer, got {self.m!r}")
        if self.m < 1:
            raise ParameterError(f"m must be at least 1, got {self.m}")
        p = parse_probability(self.p)
        if isinstance(p, int):
            p = Fraction(p)
        if not 0 <= p < 1:
            raise ParameterError(f"p must lie in [0, 1), got {self.p!r}")
        object.__setattr__(self, 'm', int(self.m))
        object.__setattr__(self, 'p', p)

    @property
    def exact(self):
        """True when every quantity can be computed in exact rational arithmetic"""
        return isinstance(self.p, Fraction) and self.m <= config.EXACT_MODE_MAX_M

    @property
    def mode(self):
        return 'exact' if self.exact else 'float'

    @property
    def p_float(self):
        return float(self.p)

    def to_dict(self):
        """Convert parameters to dictionary"""
        return {'m': self.m, 'p': format_scalar(self.p), 'mode': self.mode}


@dataclass(frozen=True)
class Pmf:
    """
    Truncated law of the collection time.

    probs[n] = P(T = n) for n = 0..n_max; tail_mass = 1 - sum(probs);
    tail_certificate bounds P(T > n_max) from above.
    """
    params: ModelParams
    probs: Tuple[Any, ...]
    n_max: int
    tail_mass: Any
    tail_certificate: Any
    geometric_bound: Any
    method: str

    def cumulative(self):
        """Partial sums P(T <= n) for n = 0..n_max"""
        running = self.probs[0] * 0
        out = []
        for prob in self.probs:
            running = running + prob
            out.append(running)
        return out

    def mean_truncated(self):
        """Sum of n * P(T = n) over the stored range"""
        total = self.probs[0] * 0
        for n, prob in enumerate(self.probs):
            total = total + n * prob
        return total

    def second_moment_truncated(self):
        total = self.probs[0] * 0
        for n, prob in enumerate(self.probs):
            total = total + n * n * prob
        return total

    def tail_mean_bound(self):
        """
        Upper bound on E[T; T > n_max].

        E[T; T > N] = N P(T > N) + sum_{n > N} P(T >= n), and the geometric
        certificate g(n) decays by (1 - q) every m steps, so the sum is at
        most (m / q) g(N + 1).
        """
        m = self.params.m
        one_minus_p = 1 - self.params.p
        q = (one_minus_p / m) ** m
        if q == 0:
            return math.inf
        return (self.n_max + m / q) * self.geometric_bound

    def to_frame(self):
        """pandas DataFrame with n, P(T=n), P(T<=n), tail_certificate"""
        return pd.DataFrame({
            'n': list(range(self.n_max + 1)),
            'probability': [format_scalar(v) for v in self.probs],
            'cumulative': [format_scalar(v) for v in self.cumulative()],
            'tail_certificate': [format_scalar(self.tail_certificate)] * (self.n_max + 1),
        })

    def to_dict(self):
        """Convert pmf to dictionary"""
        return {
            'params': self.params.to_dict(),
            'n_max': self.n_max,
            'method': self.method,
            'probs': [format_scalar(v) for v in self.probs],
            'tail_mass': format_scalar(self.tail_mass),
            'tail_certificate': format_scalar(self.tail_certificate),
        }


@dataclass(frozen=True)
class MomentReport:
    """Mean, variance and second moment of the collection time"""
    mean: Any
    variance: Any
    second_moment: Any
    method: str  # closed_form | pmf_sum | monte_carlo

    @classmethod
    def from_mean_variance(cls, mean, variance, method):
        if variance < 0:
            raise ParameterError(f"negative variance {variance!r} from {method}")
        return cls(mean=mean, variance=variance, second_moment=variance + mean * mean, method=method)

    def to_dict(self):
        """Convert moments to dictionary"""
        return {
            'method': self.method,
            'mean': format_scalar(self.mean),
            'variance': format_scalar(self.variance),
            'second_moment': format_scalar(self.second_moment),
        }


@dataclass(frozen=True)
class CoupledSample:
    """Classical and clumsy collection times of one coupled trajectory"""
    t_classical: int
    t_clumsy: int

    def __post_init__(self):
        if self.t_clumsy < self.t_classical:
            raise ParameterError("coupled sample with t_clumsy < t_classical")

    @property
    def difference(self):
        return self.t_clumsy - self.t_classical

    def to_dict(self):
        return {'t_classical': self.t_classical, 't_clumsy': self.t_clumsy}


@dataclass(frozen=True, eq=False)
class SampleSummary:
    """
    Monte Carlo batch summary.

    Keeps n, mean and the centred sum of squares m2 so that summaries of
    disjoint batches merge exactly; sorted_samples is kept only when the
    batch was run with retention.
    """
    n: int
    mean: float
    m2: float
    minimum: float
    maximum: float
    sorted_samples: Optional[np.ndarray] = None
    master_seed: Optional[int] = None
    first_stream: int = 0

    @classmethod
    def from_samples(cls, samples, master_seed=None, first_stream=0, retain=True):
        values = np.asarray(samples, dtype=float)
        if values.size == 0:
            raise ParameterError("cannot summarise an empty sample")
        mean = float(np.mean(values))
        m2 = float(np.sum((values - mean) ** 2))
        return cls(
            n=int(values.size),
            mean=mean,
            m2=m2,
            minimum=float(values.min()),
            maximum=float(values.max()),
            sorted_samples=np.sort(values) if retain else None,
            master_seed=master_seed,
            first_stream=first_stream,
        )

    @property
    def variance(self):
        """Unbiased sample variance"""
        if self.n < 2:
            return 0.0
        return max(self.m2 / (self.n - 1), 0.0)

    @property
    def standard_error(self):
        return math.sqrt(self.variance / self.n)

    def merge(self, other):
        """Pairwise (Chan et al.) combination of two disjoint batches"""
        n = self.n + other.n
        delta = other.mean - self.mean
        mean = self.mean + delta * other.n / n
        m2 = self.m2 + other.m2 + delta * delta * self.n * other.n / n
        samples = None
        if self.sorted_samples is not None and other.sorted_samples is not None:
            samples = np.sort(np.concatenate((self.sorted_samples, other.sorted_samples)))
        return SampleSummary(
            n=n,
            mean=mean,
            m2=m2,
            minimum=min(self.minimum, other.minimum),
            maximum=max(self.maximum, other.maximum),
            sorted_samples=samples,
            master_seed=self.master_seed,
            first_stream=min(self.first_stream, other.first_stream),
        )

    def content(self):
        """Everything except the retained array, for equality checks"""
        return (self.n, self.mean, self.m2, self.minimum, self.maximum,
                self.master_seed, self.first_stream)

    def to_dict(self):
        """Convert summary to dictionary"""
        return {
            'n': self.n,
            'mean': self.mean,
            'variance': self.variance,
            'standard_error': self.standard_error,
            'min': self.minimum,
            'max': self.maximum,
            'retained': self.sorted_samples is not None,
            'master_seed': self.master_seed,
            'first_stream': self.first_stream,
        }


@dataclass(frozen=True)
class BirthDeathSpec:
    """Birth rate c (also the Poisson mean of the start) and an optional fixed start"""
    c: float
    q0_override: Optional[int] = None

    def __post_init__(self):
        if not self.c > 0:
            raise ParameterError(f"c must be positive, got {self.c!r}")
        if self.q0_override is not None and self.q0_override < 0:
            raise ParameterError("q0_override must be nonnegative")


class RegimeTag(str, Enum):
    SUBCRITICAL = 'subcritical'
    CRITICAL = 'critical'
    SUPERCRITICAL = 'supercritical'
    FIXED_P = 'fixed_p'


_REGIME_DESCRIPTIONS = {
    RegimeTag.SUBCRITICAL: 'p = o(1/m)',
    RegimeTag.CRITICAL: 'p ~ c/m',
    RegimeTag.SUPERCRITICAL: 'p = omega(1/m)',
    RegimeTag.FIXED_P: 'p constant',
}


@dataclass(frozen=True)
class Regime:
    """
    Caller-supplied asymptotic regime of the p-sequence.

    Regimes describe sequences p = p(m), so they are never inferred from a
    single (m, p) point.
    """
    tag: RegimeTag
    c: Optional[float] = None

    def __post_init__(self):
        tag = RegimeTag(self.tag)
        object.__setattr__(self, 'tag', tag)
        if tag is RegimeTag.CRITICAL:
            if self.c is None or not self.c > 0:
                raise ParameterError("the critical regime needs c > 0")
            object.__setattr__(self, 'c', float(self.c))

    @classmethod
    def subcritical(cls):
        return cls(RegimeTag.SUBCRITICAL)

    @classmethod
    def critical(cls, c):
        return cls(RegimeTag.CRITICAL, c)

    @classmethod
    def supercritical(cls):
        return cls(RegimeTag.SUPERCRITICAL)

    @classmethod
    def fixed_p(cls):
        return cls(RegimeTag.FIXED_P)

    @property
    def description(self):
        return _REGIME_DESCRIPTIONS[self.tag]

    def to_dict(self):
        return {'tag': self.tag.value, 'c': self.c, 'description': self.description}


@dataclass(frozen=True)
class Rescaling:
    """(x - center) / scale when divide is set, scale * (x - center) otherwise"""
    center: float
    scale: float
    divide: bool

    def __post_init__(self):
        if not self.scale > 0:
            raise ParameterError(f"rescaling needs a positive scale, got {self.scale!r}")

    def apply(self, samples):
        values = np.asarray(samples, dtype=float) - self.center
        return values / self.scale if self.divide else values * self.scale


@dataclass(frozen=True)
class KsResult:
    """Kolmogorov-Smirnov distance with the threshold it was judged against"""
    statistic: float
    n: int
    threshold: float
    n2: Optional[int] = None
    p_value: Optional[float] = None

    @property
    def passed(self):
        return self.statistic < self.threshold

    def to_dict(self):
        return {
            'statistic': self.statistic,
            'n': self.n,
            'n2': self.n2,
            'threshold': self.threshold,
            'p_value': self.p_value,
            'pass': self.passed,
        }


@dataclass(frozen=True)
class CheckResult:
    """One line of a verification report"""
    check_id: str
    expected: Any
    observed: Any
    tolerance: Any
    passed: bool
    detail: str = ''

    def to_dict(self):
        return {
            'check_id': self.check_id,
            'expected': _jsonable(self.expected),
            'observed': _jsonable(self.observed),
            'tolerance': _jsonable(self.tolerance),
            'pass': bool(self.passed),
            'detail': self.detail,
        }


@dataclass(frozen=True)
class Report:
    """Result of one verification suite"""
    suite: str
    checks: List[CheckResult]
    environment: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self):
        return bool(self.checks) and all(check.passed for check in self.checks)

    @property
    def failures(self):
        return [check for check in self.checks if not check.passed]

    def content(self):
        """Report without timing information"""
        env = {k: v for k, v in self.environment.items() if k != 'elapsed_seconds'}
        return {
            'suite': self.suite,
            'pass': self.passed,
            'environment': _jsonable(env),
            'checks': [check.to_dict() for check in self.checks],
        }

    def to_dict(self):
        """Convert report to dictionary"""
        data = self.content()
        data['environment'] = _jsonable(self.environment)
        return data

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent, sort_keys=False)

    def to_frame(self):
        """Flat table, one row per check"""
        rows = []
        for check in self.checks:
            row = check.to_dict()
            rows.append({
                'suite': self.suite,
                'check_id': row['check_id'],
                'expected': json.dumps(row['expected']),
                'observed': json.dumps(row['observed']),
                'tolerance': json.dumps(row['tolerance']),
                'pass': row['pass'],
                'detail': row['detail'],
            })
        return pd.DataFrame(rows, columns=['suite', 'check_id', 'expected', 'observed',
                                           'tolerance', 'pass', 'detail'])
