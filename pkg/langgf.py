"""
Formal power series and weighted-language generating functions
Truncated OGF/EGF arithmetic over an exact or high-precision scalar field,
rational generating functions, the primitive collect/drop languages and the
numeric Laplace-Borel transform
"""

import itertools
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Any, Tuple

import mpmath
import numpy as np
from scipy import special

import config
from errors import ParameterError
from models import ModelParams
from quadrature import tanh_sinh
from utils.logger import get_module_logger

logger = get_module_logger('langgf')

# Dedicated context so the working precision never depends on global mpmath state
HP = mpmath.MPContext()
HP.prec = config.FLOAT_PRECISION_BITS


class ScalarField:
    """
    Coefficient domain of a series: exact rationals or high-precision floats.

    Calling the field coerces a number into it.
    """

    def __init__(self, exact):
        self.exact = bool(exact)

    @property
    def name(self):
        return 'exact' if self.exact else 'float'

    def __call__(self, value):
        if self.exact:
            if isinstance(value, Fraction):
                return value
            if isinstance(value, (int, np.integer)):
                return Fraction(int(value))
            if isinstance(value, float):
                return Fraction(value)
            raise ParameterError(f"cannot use {value!r} in exact arithmetic")
        if isinstance(value, Fraction):
            return HP.mpf(value.numerator) / value.denominator
        if isinstance(value, (int, np.integer)):
            return HP.mpf(int(value))
        return HP.mpf(value)

    @property
    def zero(self):
        return self(0)

    @property
    def one(self):
        return self(1)

    def owns(self, value):
        if self.exact:
            return isinstance(value, Fraction)
        return isinstance(value, HP.mpf)

    def __eq__(self, other):
        return isinstance(other, ScalarField) and other.exact == self.exact

    def __hash__(self):
        return hash(self.exact)

    def __repr__(self):
        return f"ScalarField({self.name})"


EXACT = ScalarField(True)
FLOAT = ScalarField(False)


def field_for(params):
    """Exact field for rational p and moderate m, high-precision floats otherwise"""
    return EXACT if params.exact else FLOAT


def partial_exponential(k, x):
    """e_k(x) = sum_{l=0}^{k} x^l / l!, with e_{-1} = 0"""
    if k < -1:
        raise ParameterError(f"partial exponential needs k >= -1, got {k}")
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        x = Fraction(int(x))
    total = x * 0
    term = x * 0 + 1
    for ell in range(k + 1):
        if ell > 0:
            term = term * x / ell
        total = total + term
    return total


class SeriesKind(str, Enum):
    OGF = 'ogf'
    EGF = 'egf'


@dataclass(frozen=True)
class FormalSeries:
    """
    Power series truncated at a fixed order.

    EGF coefficients store the weighted count of length-n words divided
    by n!, so EGF and OGF products are both plain Cauchy products of the
    stored coefficients.
    """
    coeffs: Tuple[Any, ...]
    kind: SeriesKind = SeriesKind.OGF

    def __post_init__(self):
        coeffs = tuple(self.coeffs)
        if not coeffs:
            raise ParameterError("a formal series needs at least one coefficient")
        exact_flags = {isinstance(c, (Fraction, int)) for c in coeffs}
        if len(exact_flags) > 1:
            raise ParameterError("series coefficients mix exact and floating scalars")
        field = EXACT if exact_flags.pop() else FLOAT
        object.__setattr__(self, 'coeffs', tuple(field(c) for c in coeffs))
        object.__setattr__(self, 'kind', SeriesKind(self.kind))

    @property
    def order(self):
        return len(self.coeffs) - 1

    @property
    def field(self):
        return EXACT if isinstance(self.coeffs[0], Fraction) else FLOAT

    @classmethod
    def zero(cls, order, kind=SeriesKind.OGF, field=EXACT):
        return cls(tuple(field.zero for _ in range(order + 1)), kind)

    def __getitem__(self, n):
        return self.coeffs[n]

    def __len__(self):
        return len(self.coeffs)

    def truncate(self, order):
        return FormalSeries(self.coeffs[:order + 1], self.kind)

    def _check_compatible(self, other):
        if self.field != other.field:
            raise ParameterError("cannot combine exact and floating series")

    def __add__(self, other):
        if self.kind != other.kind:
            raise ParameterError(f"cannot add {self.kind.value} and {other.kind.value} series")
        self._check_compatible(other)
        order = min(self.order, other.order)
        return FormalSeries(tuple(self.coeffs[n] + other.coeffs[n] for n in range(order + 1)),
                            self.kind)

    def cauchy(self, other):
        """Cauchy product truncated at the smaller order"""
        self._check_compatible(other)
        order = min(self.order, other.order)
        out = []
        for n in range(order + 1):
            total = self.coeffs[0] * 0
            for k in range(n + 1):
                total = total + self.coeffs[k] * other.coeffs[n - k]
            out.append(total)
        return FormalSeries(tuple(out), self.kind)

    def to_ogf(self):
        """Formal Laplace-Borel transform: coefficient n times n!"""
        if self.kind is SeriesKind.OGF:
            return self
        return FormalSeries(tuple(c * math.factorial(n) for n, c in enumerate(self.coeffs)),
                            SeriesKind.OGF)

    def to_egf(self):
        if self.kind is SeriesKind.EGF:
            return self
        return FormalSeries(tuple(c / math.factorial(n) for n, c in enumerate(self.coeffs)),
                            SeriesKind.EGF)

    def evaluate(self, x):
        """Horner evaluation of the truncated polynomial"""
        x = self.field(x)
        total = self.coeffs[0] * 0
        for c in reversed(self.coeffs):
            total = total * x + c
        return total


class CombineOp(str, Enum):
    SHUFFLE = 'shuffle'
    CONCAT = 'concat'
    UNION = 'union'


def combine(op, a, b):
    """
    Generating function of a shuffle, concatenation or disjoint union.

    The disjoint-letter and unique-factorisation hypotheses that make the
    result a language GF are the caller's responsibility.
    """
    op = CombineOp(op)
    if op is CombineOp.SHUFFLE:
        if a.kind is not SeriesKind.EGF or b.kind is not SeriesKind.EGF:
            raise ParameterError("shuffle needs two EGFs")
        return a.cauchy(b)
    if op is CombineOp.CONCAT:
        if a.kind is not SeriesKind.OGF or b.kind is not SeriesKind.OGF:
            raise ParameterError("concatenation needs two OGFs")
        return a.cauchy(b)
    return a + b


def _poly_mul(a, b):
    out = [a[0] * 0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x == 0:
            continue
        for j, y in enumerate(b):
            out[i + j] = out[i + j] + x * y
    return out


def _poly_add(a, b):
    size = max(len(a), len(b))
    zero = (a[0] if a else b[0]) * 0
    a = list(a) + [zero] * (size - len(a))
    b = list(b) + [zero] * (size - len(b))
    return [x + y for x, y in zip(a, b)]


def _poly_eval(coeffs, x):
    total = coeffs[0] * 0
    for c in reversed(coeffs):
        total = total * x + c
    return total


@dataclass(frozen=True)
class RationalGF:
    """
    Generating function stored as unnormalised numerator/denominator
    polynomials (ascending coefficients).
    """
    numerator: Tuple[Any, ...]
    denominator: Tuple[Any, ...]

    def __post_init__(self):
        object.__setattr__(self, 'numerator', tuple(self.numerator))
        object.__setattr__(self, 'denominator', tuple(self.denominator))
        if not self.denominator or self.denominator[0] == 0:
            raise ParameterError("denominator must have a nonzero constant term")

    @property
    def field(self):
        return EXACT if isinstance(self.denominator[0], Fraction) else FLOAT

    def series(self, order):
        """Taylor coefficients at 0 up to `order` by series division"""
        field = self.field
        num = [field(c) for c in self.numerator]
        den = [field(c) for c in self.denominator]
        d0 = den[0]
        out = []
        for n in range(order + 1):
            acc = num[n] if n < len(num) else field.zero
            for k in range(1, min(n, len(den) - 1) + 1):
                acc = acc - den[k] * out[n - k]
            out.append(acc / d0)
        return FormalSeries(tuple(out), SeriesKind.OGF)

    def evaluate(self, x):
        x = self.field(x)
        return _poly_eval(self.numerator, x) / _poly_eval(self.denominator, x)

    def __mul__(self, other):
        return RationalGF(_poly_mul(self.numerator, other.numerator),
                          _poly_mul(self.denominator, other.denominator))

    def __truediv__(self, other):
        # Shared denominators cancel structurally; no polynomial GCD is attempted
        if self.denominator == other.denominator:
            return RationalGF(self.numerator, other.numerator)
        return RationalGF(_poly_mul(self.numerator, other.denominator),
                          _poly_mul(self.denominator, other.numerator))

    def __sub__(self, other):
        if self.denominator == other.denominator:
            negated = [-c for c in other.numerator]
            return RationalGF(_poly_add(self.numerator, negated), self.denominator)
        left = _poly_mul(self.numerator, other.denominator)
        right = [-c for c in _poly_mul(other.numerator, self.denominator)]
        return RationalGF(_poly_add(left, right), _poly_mul(self.denominator, other.denominator))


class LetterClass(str, Enum):
    COLLECT = 'collect'
    DROP = 'drop'


class Direction(str, Enum):
    BELOW = 'below'
    AT_OR_ABOVE = 'at_or_above'


@dataclass(frozen=True)
class PrimitiveLangSpec:
    """
    Words over a single letter c_i (collect) or d_i (drop) whose length is
    below k or at least k.
    """
    letter_class: LetterClass
    m: int
    p: Any
    k: int
    direction: Direction

    def __post_init__(self):
        object.__setattr__(self, 'letter_class', LetterClass(self.letter_class))
        object.__setattr__(self, 'direction', Direction(self.direction))
        # ModelParams enforces m >= 1 and 0 <= p < 1
        params = ModelParams(self.m, self.p)
        object.__setattr__(self, 'p', params.p)
        if self.k < 0:
            raise ParameterError(f"threshold k must be nonnegative, got {self.k}")

    @property
    def params(self):
        return ModelParams(self.m, self.p)

    @property
    def letter_weight(self):
        field = field_for(self.params)
        p = field(self.p)
        if self.letter_class is LetterClass.COLLECT:
            return (1 - p) / self.m
        return p / self.m


def primitive_egf(spec, order):
    """EGF of a primitive language truncated at `order`"""
    if order < 0:
        raise ParameterError("order must be nonnegative")
    field = field_for(spec.params)
    rate = spec.letter_weight
    coeffs = []
    term = field.one
    for n in range(order + 1):
        if n > 0:
            term = term * rate / n
        below = n <= spec.k - 1
        keep = below if spec.direction is Direction.BELOW else not below
        coeffs.append(term if keep else field.zero)
    return FormalSeries(tuple(coeffs), SeriesKind.EGF)


def _linear_factors(m, field):
    """Coefficient lists of (m - j z) for j = 1..m"""
    return [[field(m), field(-j)] for j in range(1, m + 1)]


def _product(polys, field):
    out = [field.one]
    for poly in polys:
        out = _poly_mul(out, poly)
    return out


def ogf_h(params):
    """
    OGF of the words after which every coupon type is held:
    (1-p)^m m! z^m / prod_{j=1}^m (m - j z).
    """
    field = field_for(params)
    m = params.m
    one_minus_p = 1 - field(params.p)
    leading = one_minus_p ** m * math.factorial(m)
    numerator = [field.zero] * m + [leading]
    denominator = _product(_linear_factors(m, field), field)
    return RationalGF(numerator, denominator)


def ogf_g(params):
    """
    OGF of the words in which every drop is later recovered, over the
    common denominator prod_{k=1}^m (m - k z).
    """
    field = field_for(params)
    m = params.m
    one_minus_p = 1 - field(params.p)
    factors = _linear_factors(m, field)
    numerator = [field.zero]
    falling = field.one
    for ell in range(m + 1):
        if ell > 0:
            falling = falling * (m - ell + 1)
        head = [field.zero] * ell + [falling * one_minus_p ** ell]
        numerator = _poly_add(numerator, _poly_mul(head, _product(factors[ell:], field)))
    denominator = _product(factors, field)
    return RationalGF(numerator, denominator)


def egf_h(params):
    """Vectorised analytic EGF of H: (1-p)^m (e^{u/m} - 1)^m"""
    m, p = params.m, params.p_float

    def evaluate(u):
        return (1.0 - p) ** m * np.expm1(np.asarray(u, dtype=float) / m) ** m
    return evaluate


def egf_g(params):
    """Vectorised analytic EGF of G: ((1-p)(e^{u/m} - 1) + 1)^m"""
    m, p = params.m, params.p_float

    def evaluate(u):
        return ((1.0 - p) * np.expm1(np.asarray(u, dtype=float) / m) + 1.0) ** m
    return evaluate


def laplace_borel(egf_eval, x, rel_tol=None):
    """
    Numeric Laplace-Borel transform: integral of egf(x t) e^{-t} over t > 0.

    Parameters:
    -----------
    egf_eval : callable
        Vectorised EGF, bounded by e^{u} for u >= 0
    x : float
        Evaluation point in (0, 1)
    rel_tol : float, optional
        Relative tolerance; the domain is cut at T* = ln(10/rel_tol)/(1-x)

    Returns:
    --------
    float
        The OGF value at x
    """
    rel_tol = config.DEFAULT_REL_TOL if rel_tol is None else rel_tol
    x = float(x)
    if not 0 < x < 1:
        raise ParameterError(f"Laplace-Borel evaluation point must lie in (0, 1), got {x}")
    t_star = math.log(10.0 / rel_tol) / (1.0 - x)

    def integrand(t):
        return np.asarray(egf_eval(x * t), dtype=float) * np.exp(-t)

    value, error = tanh_sinh(integrand, 0.0, t_star, rel_tol=rel_tol)
    logger.debug(f"Laplace-Borel at x={x}: {value!r} (error estimate {error:.2e}, T*={t_star:.1f})")
    return value


def generalized_binomial(nu, k):
    """
    binom(nu, k) for real nu and integer k >= 0, via log-gamma with sign tracking.

    Returns:
    --------
    tuple
        (sign, log_abs) with sign in {-1, 0, 1}; log_abs is -inf when sign is 0
    """
    if k < 0:
        return 0, -math.inf
    if k == 0:
        return 1, 0.0
    nu = float(nu)
    if nu < 0:
        # binom(nu, k) = (-1)^k binom(k - nu - 1, k)
        sign, log_abs = generalized_binomial(k - nu - 1.0, k)
        return (-1) ** k * sign, log_abs
    if nu == math.floor(nu) and nu < k:
        return 0, -math.inf
    log_abs = float(special.gammaln(nu + 1.0) - special.gammaln(k + 1.0) - special.gammaln(nu - k + 1.0))
    sign = int(special.gammasgn(nu + 1.0) * special.gammasgn(nu - k + 1.0))
    return sign, log_abs


def binomial_value(nu, k):
    sign, log_abs = generalized_binomial(nu, k)
    if sign == 0:
        return 0.0
    return sign * math.exp(log_abs)


class LanguageName(str, Enum):
    H = 'H'  # every coupon type held
    G = 'G'  # every drop recovered
    J = 'J'  # first word of H, no proper prefix in H


def enumerate_language_weights(params, language, max_length):
    """
    Brute-force total weight of the words of each length in H, G or J.

    Letters are (i, collect) with weight (1-p)/m and (i, drop) with
    weight p/m. Feasible only for tiny alphabets.
    """
    language = LanguageName(language)
    field = field_for(params)
    m = params.m
    p = field(params.p)
    collect_weight = (1 - p) / m
    drop_weight = p / m
    letters = [(i, False) for i in range(m)] + [(i, True) for i in range(m)]
    totals = []
    for length in range(max_length + 1):
        total = field.zero
        for word in itertools.product(letters, repeat=length):
            # status: 0 never updated, 1 last update collect, 2 last update drop
            status = [0] * m
            hit_before_end = False
            weight = field.one
            for position, (coupon, is_drop) in enumerate(word):
                status[coupon] = 2 if is_drop else 1
                weight = weight * (drop_weight if is_drop else collect_weight)
                if position < length - 1 and all(s == 1 for s in status):
                    hit_before_end = True
            in_h = all(s == 1 for s in status)
            if language is LanguageName.H:
                member = in_h
            elif language is LanguageName.G:
                member = all(s != 2 for s in status)
            else:
                member = in_h and not hit_before_end
            if member:
                total = total + weight
        totals.append(total)
    return totals
