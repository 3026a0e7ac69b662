"""The Gauss map T(x) = 1/x mod 1 and its continued-fraction digit partition.

Random reals and quadratic irrationals are expanded by a homographic machine
fed with their binary digits ("binary"): each digit is emitted only once the
bits read so far pin it down, so the result is the continued fraction of the
very point whose binary expansion the source yields. Rationals use the
Euclidean algorithm.

"sampled" is an opt-in distributional sampler: given digits a_1..a_n the next
one is drawn from its exact conditional law, which only depends on
r = q_{n-1}/q_n. With a fresh uniform u the next digit is

    a = floor((1 + r)/u - r)

and r becomes 1/(a + r). The digits belong to a Lebesgue distributed point,
but not to the binary expansion of the source, so orbits of one real under the
two methods differ. Every floor is certified with integer arithmetic on an
outward-rounded bracket of r and a dyadic bracket of u.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from trim_ergodic import settings
from trim_ergodic.backend import MPZ
from trim_ergodic.exceptions import (
    InvalidInterval,
    InvalidSymbol,
    OrbitTerminated,
    RefinementBudgetExceeded,
)
from trim_ergodic.reals import ExactRational, LazyUniformReal, RealSource
from trim_ergodic.systems.base import (
    Moment,
    OrbitDigits,
    Partition,
    SystemKind,
    SystemModel,
    bit_budget,
)

logger = logging.getLogger(__name__)

LN2 = math.log(2)
METHODS = ("binary", "sampled")
# give up on the dyadic bracket of r once u has been refined this far
_EXACT_RATIO_AFTER_BITS = 256


def gauss_digit_probability(n: int) -> float:
    """mu_g{a_1 = n} = log2(1 + 1/(n(n+2)))."""
    if n < 1:
        raise InvalidSymbol(f"continued fraction digits start at 1, got {n}")
    return math.log1p(1 / (n * (n + 2))) / LN2


def gauss_digit_probabilities(n_max: int) -> np.ndarray:
    """Digit probabilities for n = 1..n_max as a float64 array."""
    n = np.arange(1, n_max + 1, dtype=np.float64)
    return np.log1p(1.0 / (n * (n + 2.0))) / LN2


def gauss_measure(a, b) -> mpmath.mpf:
    """mu_g([a, b]) = (ln(1+b) - ln(1+a)) / ln 2 at working precision."""
    try:
        lo, hi = Fraction(a), Fraction(b)
    except (TypeError, ValueError) as exc:
        raise InvalidInterval(f"not an interval: [{a}, {b}]") from exc
    if not 0 <= lo <= hi <= 1:
        raise InvalidInterval(f"[{a}, {b}] is not a subinterval of [0, 1]")
    if lo == hi:
        return mpmath.mpf(0)
    with mpmath.workdps(settings.WORKING_DPS):
        ratio = mpmath.mpf(hi.denominator + hi.numerator) * lo.denominator
        ratio /= mpmath.mpf(lo.denominator + lo.numerator) * hi.denominator
        return +(mpmath.log(ratio) / mpmath.log(2))


def convergents(digits, integer_part: int = 0) -> list[Fraction]:
    """Convergents p_n/q_n of [integer_part; a_1, ..., a_n]."""
    p_prev, p = 1, integer_part
    q_prev, q = 0, 1
    result = []
    for digit in digits:
        p_prev, p = p, digit * p + p_prev
        q_prev, q = q, digit * q + q_prev
        result.append(Fraction(p, q))
    return result


def cylinder_interval(word) -> tuple[Fraction, Fraction]:
    """Endpoints of the set of x in (0,1) whose first digits are ``word``."""
    p_prev, p = 1, 0
    q_prev, q = 0, 1
    for digit in word:
        if not isinstance(digit, int) or digit < 1:
            raise InvalidSymbol(f"{digit!r} is not a continued fraction digit")
        p_prev, p = p, digit * p + p_prev
        q_prev, q = q, digit * q + q_prev
    ends = Fraction(p, q), Fraction(p + p_prev, q + q_prev)
    return min(ends), max(ends)


def gauss_cylinder_measure(word) -> mpmath.mpf:
    return gauss_measure(*cylinder_interval(word))


def gauss_first_moment(m: int) -> float:
    # sum_{n<=m} n log2(1 + 1/(n(n+2))), telescoped
    if m < 1:
        return 0.0
    return (math.log(m + 1) - m * math.log1p(1 / (m + 1))) / LN2


def gauss_second_moment(m: int) -> float:
    # sum_{n<=m} n^2 log2(1 + 1/(n(n+2))), telescoped
    if m < 1:
        return 0.0
    with mpmath.workdps(settings.WORKING_DPS):
        value = (2 * m - 1) * mpmath.log(m + 1)
        value -= mpmath.mpf(m) ** 2 * mpmath.log1p(mpmath.mpf(1) / (m + 1))
        value -= 2 * mpmath.loggamma(m + 1)
        return float(value / mpmath.log(2))


@dataclass(frozen=True)
class GaussDigitPartition(Partition):
    """Cylinders {a_1 = n} with the digit value n, tabulated up to ``i_max``.

    Truncated moments use telescoped closed forms and are exact for every
    threshold, also beyond ``i_max``.
    """

    i_max: int = settings.GAUSS_I_MAX

    countable = True

    def cells(self, cap=None):
        top = self.i_max if cap is None else min(cap, self.i_max)
        return range(1, top + 1)

    def measure(self, i):
        self.check_cell(i)
        return gauss_digit_probability(i)

    def value(self, i):
        self.check_cell(i)
        return i

    def interval(self, i):
        self.check_cell(i)
        return Fraction(1, i + 1), Fraction(1, i)

    @property
    def tail_mass(self):
        return math.log1p(1 / (self.i_max + 1)) / LN2

    def truncated_moment(self, threshold, power):
        m = math.floor(threshold) if threshold < math.inf else self.i_max
        match power:
            case 1:
                return Moment(gauss_first_moment(m))
            case 2:
                return Moment(gauss_second_moment(m))
        raise ValueError(f"truncated moments are available for powers 1 and 2, not {power}")

    def tail_measure(self, level):
        if level < 1:
            return 1.0
        return math.log1p(1 / (math.floor(level) + 1)) / LN2


def gauss_system(i_max: int = settings.GAUSS_I_MAX) -> SystemModel:
    return SystemModel(
        kind=SystemKind.GAUSS,
        partition=GaussDigitPartition(i_max),
        observable="digit",
        name="gauss",
    )


def _certify_digit(lo_num, lo_den, hi_num, hi_den, k, length):
    """floor((1+r)/u - r) if it is constant for r in [lo, hi], u in (k, k+1)/2^length."""
    if k == 0:
        return None
    scale = 1 << length
    digit = ((lo_den + lo_num) * scale - lo_num * (k + 1)) // (lo_den * (k + 1))
    top = (hi_den + hi_num) * scale - hi_num * k
    if top <= (digit + 1) * hi_den * k:
        return digit
    return None


def _ratio_from_history(digits) -> tuple[int, int]:
    """Exact q_{n-1}, q_n of the digits emitted so far."""
    q_prev, q = MPZ(0), MPZ(1)
    for digit in digits:
        q_prev, q = q, digit * q + q_prev
    return q_prev, q


def sampled_digits(source: LazyUniformReal, n: int) -> OrbitDigits:
    """Gauss-distributed digits drawn cylinder by cylinder from fresh uniforms."""
    budget = bit_budget(n)
    chunk = settings.UNIFORM_CHUNK_BITS
    precision = settings.GAUSS_RATIO_PRECISION
    one = MPZ(1) << precision
    one_squared = one * one
    lo = hi = MPZ(0)
    cursor = 0
    digits = []
    for _ in range(n):
        if cursor + chunk > budget:
            raise RefinementBudgetExceeded(budget, len(digits))
        length = chunk
        k = source.window(cursor, chunk)
        exact_ratio = None
        while True:
            if exact_ratio is None:
                digit = _certify_digit(lo, one, hi, one, k, length)
            else:
                digit = _certify_digit(*exact_ratio, *exact_ratio, k, length)
            if digit is not None:
                break
            if exact_ratio is None and length >= _EXACT_RATIO_AFTER_BITS:
                logger.debug("falling back to the exact ratio after %d digits", len(digits))
                exact_ratio = _ratio_from_history(digits)
                continue
            if cursor + length + chunk > budget:
                raise RefinementBudgetExceeded(budget, len(digits))
            k = (k << chunk) | source.window(cursor + length, chunk)
            length += chunk
        digit = int(digit)
        digits.append(digit)
        cursor += length
        if exact_ratio is None:
            lo, hi = one_squared // (digit * one + hi), -(-one_squared // (digit * one + lo))
        else:
            q_prev, q = exact_ratio
            q_next = digit * q + q_prev
            lo, hi = (q << precision) // q_next, -(-(q << precision) // q_next)
    return OrbitDigits(tuple(digits), tuple(digits), exact=True, bits_consumed=cursor)


def homographic_digits(source: RealSource, n: int, word_bits: int | None = None) -> OrbitDigits:
    """Digits of the number whose binary expansion ``source`` yields.

    The state (a, b, c, d) stands for t = (a*u + b)/(c*u + d), u being the part of
    the expansion not read yet; the next digit is floor(1/t).
    """
    word_bits = word_bits or settings.UNIFORM_CHUNK_BITS
    budget = bit_budget(n)
    a, b, c, d = MPZ(1), MPZ(0), MPZ(0), MPZ(1)
    cursor = 0
    digits = []
    while len(digits) < n:
        if b > 0 and a + b > 0:
            m0, r0 = divmod(d, b)
            m1, r1 = divmod(c + d, a + b)
            digit = None
            if m0 == m1:
                digit = m0
            elif m0 == m1 + 1 and r0 == 0:
                digit = m1
            elif m1 == m0 + 1 and r1 == 0:
                digit = m0
            if digit is not None:
                a, b, c, d = c - digit * a, d - digit * b, a, b
                digits.append(int(digit))
                continue
        if cursor + word_bits > budget:
            raise RefinementBudgetExceeded(budget, len(digits))
        word = source.window(cursor, word_bits)
        cursor += word_bits
        b = a * word + (b << word_bits)
        d = c * word + (d << word_bits)
    return OrbitDigits(tuple(digits), tuple(digits), exact=True, bits_consumed=cursor)


def euclid_digits(x: ExactRational, n: int) -> OrbitDigits:
    """Digits of a rational by the Euclidean algorithm; the integer part is dropped."""
    frac = x.exact_value
    digits = []
    while len(digits) < n:
        if frac == 0:
            raise OrbitTerminated(
                f"{x.value} has only {len(digits)} continued fraction digits, {n} requested"
            )
        digit, remainder = divmod(frac.denominator, frac.numerator)
        digits.append(digit)
        frac = Fraction(remainder, frac.numerator)
    return OrbitDigits(tuple(digits), tuple(digits), exact=True)


def gauss_digits(x, n: int, method: str | None = None) -> OrbitDigits:
    """First ``n`` continued fraction digits a_1..a_n of ``x``."""
    if n < 1:
        raise ValueError(f"need at least one digit, got n={n}")
    if isinstance(x, ExactRational):
        return euclid_digits(x, n)
    match method or "binary":
        case "binary":
            return homographic_digits(x, n)
        case "sampled":
            if not isinstance(x, LazyUniformReal):
                raise ValueError("the sampled method needs a random real")
            return sampled_digits(x, n)
    raise ValueError(f"unknown digit method {method!r}, expected one of {METHODS}")
