"""Lazily refined reals in (0, 1).

A :class:`LazyUniformReal` is a uniform random real given by an endless,
replayable stream of random bits; bits are generated on demand in 64-bit words
from a PCG64 stream seeded with the sample seed. The two test hooks,
:class:`ExactRational` and :class:`QuadraticIrrational`, offer the same
``window`` interface over the binary expansion of a fixed number.
"""

import logging
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Protocol

import numpy as np

from trim_ergodic.exceptions import InvalidInterval

logger = logging.getLogger(__name__)

WORD_BITS = 64
_WORD_MASK = (1 << WORD_BITS) - 1
# generate at least this many words per refinement
_MIN_BLOCK = 64


class RealSource(Protocol):
    """Anything orbit builders can read binary digits from."""

    @property
    def exact_value(self) -> Fraction | None: ...

    def window(self, start: int, length: int) -> int: ...


class LazyUniformReal:
    """Uniform random real in (0,1) refined one 64-bit word at a time.

    The value is ``0.b_1 b_2 b_3 ...`` with a conceptual final 1-bit appended,
    so it never coincides with a dyadic endpoint.
    """

    exact_value = None

    def __init__(self, seed: int):
        self.seed = int(seed) & _WORD_MASK
        self._bit_generator = np.random.PCG64(self.seed)
        self._words: list[int] = []

    def __repr__(self):
        return f"LazyUniformReal(seed={self.seed}, refined_len={self.refined_len})"

    @property
    def refined_len(self) -> int:
        return len(self._words) * WORD_BITS

    def refine(self, nbits: int) -> None:
        missing = -(-nbits // WORD_BITS) - len(self._words)
        if missing <= 0:
            return
        raw = self._bit_generator.random_raw(max(missing, _MIN_BLOCK))
        self._words.extend(raw.tolist())

    def window(self, start: int, length: int) -> int:
        """Bits ``start .. start+length-1`` (0-based) as an unsigned integer."""
        if length <= 0:
            return 0
        end = start + length
        self.refine(end)
        first, last = start // WORD_BITS, (end - 1) // WORD_BITS
        acc = 0
        for word in self._words[first : last + 1]:
            acc = (acc << WORD_BITS) | word
        acc >>= (last + 1) * WORD_BITS - end
        return acc & ((1 << length) - 1)

    def prefix(self, nbits: int) -> int:
        return self.window(0, nbits)

    def bounds(self, nbits: int) -> tuple[Fraction, Fraction]:
        """Rational bracket ``[k/2^P, (k+1)/2^P]`` implied by the first P bits."""
        k = self.prefix(nbits)
        return Fraction(k, 1 << nbits), Fraction(k + 1, 1 << nbits)

    def bit_array(self, nbits: int) -> np.ndarray:
        """First ``nbits`` bits as a uint8 array of zeros and ones."""
        self.refine(nbits)
        words = np.array(self._words[: -(-nbits // WORD_BITS)], dtype=">u8")
        return np.unpackbits(words.view(np.uint8))[:nbits]


def sample_real(seed: int) -> LazyUniformReal:
    return LazyUniformReal(seed)


@dataclass(frozen=True)
class ExactRational:
    """Test hook: a fixed rational; orbits use its fractional part."""

    value: Fraction

    @property
    def exact_value(self) -> Fraction:
        return self.value - math.floor(self.value)

    def window(self, start: int, length: int) -> int:
        frac = self.exact_value
        head = (frac.numerator << (start + length)) // frac.denominator
        return head & ((1 << length) - 1)


@dataclass(frozen=True)
class QuadraticIrrational:
    """Test hook: the number ``(p + r*sqrt(d)) / q`` with ``d`` not a square."""

    p: int
    r: int
    d: int
    q: int

    def __post_init__(self):
        if self.q == 0 or self.r == 0 or self.d <= 0:
            raise InvalidInterval(f"not a quadratic irrational: {self}")
        if math.isqrt(self.d) ** 2 == self.d:
            raise InvalidInterval(f"{self.d} is a perfect square")
        if self.q < 0:
            object.__setattr__(self, "p", -self.p)
            object.__setattr__(self, "r", -self.r)
            object.__setattr__(self, "q", -self.q)

    exact_value = None

    def _scaled_floor(self, k: int) -> int:
        """floor(value * 2^k), exact."""
        root = math.isqrt(self.r * self.r * self.d << (2 * k))
        if self.r < 0:
            root = -root - 1
        return ((self.p << k) + root) // self.q

    def window(self, start: int, length: int) -> int:
        end = start + length
        head = self._scaled_floor(end) - (self._scaled_floor(0) << end)
        return head & ((1 << length) - 1)

    def __float__(self):
        return (self.p + self.r * math.sqrt(self.d)) / self.q


_QUADRATIC = re.compile(r"^\(?\s*(-?\d+)\s*,\s*(-?\d+)\s*,\s*(\d+)\s*,\s*(-?\d+)\s*\)?$")


def parse_real(text: str) -> ExactRational | QuadraticIrrational:
    """Parse a test-hook number: ``"p/q"``, a decimal, or ``"p,r,d,q"``."""
    text = text.strip()
    match = _QUADRATIC.match(text)
    if match:
        return QuadraticIrrational(*(int(group) for group in match.groups()))
    try:
        return ExactRational(Fraction(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise InvalidInterval(f"cannot parse real {text!r}: {exc}") from exc
