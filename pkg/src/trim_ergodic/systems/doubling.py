"""The doubling map T(x) = 2x mod 1.

Two kinds of partitions are supported: dyadic cylinders of a fixed level (a
full shift on binary words) and the level sets {floor(1/x) = n}, which carry the
unbounded observable floor(1/{2^n x}).
"""

import functools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import special

from trim_ergodic import settings
from trim_ergodic.exceptions import InvalidSymbol, OrbitTerminated, RefinementBudgetExceeded
from trim_ergodic.reals import ExactRational, RealSource
from trim_ergodic.systems.base import (
    FinitePartition,
    Moment,
    OrbitDigits,
    Partition,
    SystemKind,
    SystemModel,
    bit_budget,
)


# harmonic numbers up to this index are summed exactly
_EXACT_HARMONIC_MAX = 500
_FIRST_WINDOW_BITS = 16


@functools.lru_cache(maxsize=1024)
def _harmonic_exact(n: int) -> Fraction:
    return sum((Fraction(1, k) for k in range(1, n + 1)), Fraction(0))


def harmonic(n: int) -> Fraction | float:
    """H_n, exact for small n and through the digamma function otherwise."""
    if n <= _EXACT_HARMONIC_MAX:
        return _harmonic_exact(n)
    return float(special.digamma(n + 1) + np.euler_gamma)


@dataclass(frozen=True)
class ReciprocalPartition(Partition):
    """Level sets A_n = (1/(n+1), 1/n] of floor(1/x) with Lebesgue measure."""

    i_max: int = settings.GAUSS_I_MAX

    countable = True

    def cells(self, cap=None):
        top = self.i_max if cap is None else min(cap, self.i_max)
        return range(1, top + 1)

    def measure(self, i):
        self.check_cell(i)
        return Fraction(1, i * (i + 1))

    def value(self, i):
        self.check_cell(i)
        return i

    def interval(self, i):
        self.check_cell(i)
        return Fraction(1, i + 1), Fraction(1, i)

    @property
    def tail_mass(self):
        return Fraction(1, self.i_max + 1)

    def truncated_moment(self, threshold, power):
        m = math.floor(threshold) if threshold < math.inf else self.i_max
        if m < 1:
            return Moment(Fraction(0))
        # sum_{n<=m} n/(n(n+1)) = H_{m+1} - 1 and sum_{n<=m} n^2/(n(n+1)) = m - (H_{m+1} - 1)
        first = harmonic(m + 1) - 1
        match power:
            case 1:
                return Moment(first)
            case 2:
                return Moment(m - first)
        raise ValueError(f"truncated moments are available for powers 1 and 2, not {power}")

    def tail_measure(self, level):
        if level < 1:
            return Fraction(1)
        return Fraction(1, math.floor(level) + 1)


def dyadic_partition(level: int, values=None) -> FinitePartition:
    """The 2**level cylinders [j/2^level, (j+1)/2^level) with the given cell values."""
    if level < 1:
        raise ValueError(f"cylinder level must be positive, got {level}")
    cells = 1 << level
    if values is None:
        values = tuple(1 if j < cells // 2 else 0 for j in range(cells))
    values = tuple(values)
    if len(values) != cells:
        raise ValueError(f"level {level} needs {cells} cell values, got {len(values)}")
    width = Fraction(1, cells)
    return FinitePartition(
        measures=(width,) * cells,
        values=values,
        intervals=tuple((j * width, (j + 1) * width) for j in range(cells)),
    )


def doubling_system(level: int = 1, values=None) -> SystemModel:
    """Doubling map with a cylinder-constant observable; by default 1 on [0, 1/2)."""
    return SystemModel(
        kind=SystemKind.DOUBLING,
        partition=dyadic_partition(level, values),
        observable="indicator" if values is None else "cylinder",
        level=level,
        name=f"doubling-level-{level}",
    )


def doubling_reciprocal_system(i_max: int = settings.GAUSS_I_MAX) -> SystemModel:
    """Doubling map with the observable floor(1/x)."""
    return SystemModel(
        kind=SystemKind.DOUBLING,
        partition=ReciprocalPartition(i_max),
        observable="reciprocal",
        name="doubling-reciprocal",
    )


def binary_digits(source: RealSource, count: int) -> np.ndarray:
    """First ``count`` binary digits of ``source`` as a uint8 array."""
    if hasattr(source, "bit_array"):
        return source.bit_array(count)
    nbytes = -(-count // 8)
    raw = source.window(0, count).to_bytes(nbytes, "big")
    return np.unpackbits(np.frombuffer(raw, dtype=np.uint8))[nbytes * 8 - count :]


def _cylinder_orbit(source: RealSource, n: int, partition: FinitePartition, level: int) -> OrbitDigits:
    bits = binary_digits(source, n + level - 1).astype(np.int64)
    weights = 1 << np.arange(level - 1, -1, -1, dtype=np.int64)
    symbols = (sliding_window_view(bits, level) @ weights).tolist()
    values = tuple(partition.values[s] for s in symbols)
    return OrbitDigits(tuple(symbols), values, exact=True, bits_consumed=n + level - 1)


def _reciprocal_orbit_exact(x: ExactRational, n: int) -> OrbitDigits:
    y = x.exact_value
    values = []
    for step in range(n):
        if y == 0:
            raise OrbitTerminated(f"2^{step} * {x.value} is an integer")
        values.append(y.denominator // y.numerator)
        y = 2 * y
        y -= math.floor(y)
    return OrbitDigits(tuple(values), tuple(values), exact=True)


def _reciprocal_orbit(source: RealSource, n: int) -> OrbitDigits:
    budget = bit_budget(n)
    values = []
    consumed = 0
    for step in range(n):
        # {2^step x} lies strictly between w/2^m and (w+1)/2^m
        m = _FIRST_WINDOW_BITS
        while True:
            if step + m > budget:
                raise RefinementBudgetExceeded(budget, step)
            w = source.window(step, m)
            if w:
                v = (1 << m) // (w + 1)
                if (1 << m) <= (v + 1) * w:
                    break
            m *= 2
        values.append(v)
        consumed = max(consumed, step + m)
    return OrbitDigits(tuple(values), tuple(values), exact=True, bits_consumed=consumed)


def doubling_orbit(x, n: int, system: SystemModel | None = None) -> OrbitDigits:
    """Symbols and observable values along the doubling orbit of ``x``.

    Without a system the observable is floor(1/{2^n x}) and the symbols are its
    values, i.e. the cells of the reciprocal partition.
    """
    if n < 1:
        raise ValueError(f"need at least one step, got n={n}")
    if system is not None and system.kind is not SystemKind.DOUBLING:
        raise ValueError(f"{system.kind} is not a doubling system")
    if system is None or isinstance(system.partition, ReciprocalPartition):
        if isinstance(x, ExactRational):
            return _reciprocal_orbit_exact(x, n)
        return _reciprocal_orbit(x, n)
    return _cylinder_orbit(x, n, system.partition, system.level)


def dyadic_word_measure(word, level: int) -> Fraction:
    """Measure of the doubling cylinder {x : symbol_n(x) = word[n]} for level-``level`` cells.

    Neighbouring symbols overlap in level-1 bits; inconsistent words are empty.
    """
    cells = 1 << level
    low_mask = (cells >> 1) - 1
    for n, s in enumerate(word):
        if not isinstance(s, (int, np.integer)) or not 0 <= s < cells:
            raise InvalidSymbol(f"{s!r} is not a level-{level} cylinder index")
        if n and (word[n - 1] & low_mask) != (s >> 1):
            return Fraction(0)
    if not word:
        return Fraction(1)
    return Fraction(1, 1 << (level + len(word) - 1))


def _preimage(pieces):
    """T^{-1} of a union of intervals."""
    halves = [(lo / 2, hi / 2) for lo, hi in pieces]
    return halves + [((lo + 1) / 2, (hi + 1) / 2) for lo, hi in pieces]


def _intersect(pieces, cell):
    lo, hi = cell
    result = []
    for a, b in pieces:
        left, right = max(a, lo), min(b, hi)
        if left < right:
            result.append((left, right))
    return result


def interval_word_measure(word, partition: Partition) -> Fraction:
    """Lebesgue measure of A_{w_0} ∩ T^{-1} A_{w_1} ∩ ... for an interval partition."""
    pieces = [(Fraction(0), Fraction(1))]
    for step, s in enumerate(reversed(word)):
        try:
            cell = partition.interval(s)
        except ValueError as exc:
            raise InvalidSymbol(f"{s!r} is not a cell of the partition") from exc
        if step:
            pieces = _preimage(pieces)
        pieces = _intersect(pieces, cell)
    return sum((b - a for a, b in pieces), Fraction(0))


def preimage_overlap(first: tuple[Fraction, Fraction], n: int, second: tuple[Fraction, Fraction]) -> Fraction:
    """mu(I ∩ T^{-n} J) for intervals I = [lo, hi) and J = [a, b)."""
    a, b = second
    scale = 1 << n

    def below(x):
        # mu([0, x) ∩ T^{-n} J)
        y = x * scale
        whole = math.floor(y)
        rest = y - whole
        return (whole * (b - a) + min(max(rest - a, 0), b - a)) / scale

    return below(first[1]) - below(first[0])
