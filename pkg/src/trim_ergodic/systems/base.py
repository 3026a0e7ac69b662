import math
from abc import ABC, abstractmethod
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from fractions import Fraction

from trim_ergodic import settings
from trim_ergodic.exceptions import InvalidCell, InvalidSystem

Number = int | float | Fraction


class SystemKind(StrEnum):
    GAUSS = "gauss"
    DOUBLING = "doubling"
    MARKOV = "markov"


@dataclass(frozen=True)
class Moment:
    """A truncated moment and a bound on the mass the table could not see."""

    value: Number
    tail: Number = 0


class Partition(ABC):
    """Countable partition {A_i} together with the observable's value on each cell."""

    countable = False

    @abstractmethod
    def cells(self, cap: int | None = None) -> Sequence[int]:
        """Cell indices in increasing order, at most ``cap`` of them."""

    @abstractmethod
    def measure(self, i: int) -> Number: ...

    @abstractmethod
    def value(self, i: int) -> Number: ...

    @abstractmethod
    def truncated_moment(self, threshold: float, power: int) -> Moment:
        """Sum of value**power * measure over cells with value <= threshold."""

    @abstractmethod
    def tail_measure(self, level: float) -> Number:
        """Measure of {f > level}."""

    @property
    def tail_mass(self) -> Number:
        """Mass of the cells beyond the tabulated ones."""
        return 0

    def interval(self, i: int) -> tuple[Fraction, Fraction] | None:
        """Cell as a subinterval of [0, 1], when the partition is made of intervals."""
        return None

    def check_cell(self, i: int) -> None:
        cells = self.cells()
        if not isinstance(i, int) or not cells or i < cells[0] or i > cells[-1]:
            raise InvalidCell(f"cell {i!r} is not part of {type(self).__name__}")


@dataclass(frozen=True)
class FinitePartition(Partition):
    """Finitely many cells with exact measures.

    ``tail_mass`` is mass of cells that are not listed; their values are known
    only to exceed ``tail_floor``.
    """

    measures: tuple[Fraction, ...]
    values: tuple[Number, ...]
    intervals: tuple[tuple[Fraction, Fraction], ...] | None = None
    tail_mass: Fraction = Fraction(0)
    tail_floor: Number | None = None

    def __post_init__(self):
        if len(self.measures) != len(self.values):
            raise InvalidSystem("measures and values differ in length")

    def cells(self, cap=None):
        count = len(self.measures) if cap is None else min(cap, len(self.measures))
        return range(count)

    def measure(self, i):
        self.check_cell(i)
        return self.measures[i]

    def value(self, i):
        self.check_cell(i)
        return self.values[i]

    def interval(self, i):
        if self.intervals is None:
            return None
        self.check_cell(i)
        return self.intervals[i]

    def truncated_moment(self, threshold, power):
        total = sum(
            (v**power * m for m, v in zip(self.measures, self.values, strict=True) if v <= threshold),
            Fraction(0),
        )
        tail = 0
        if self.tail_mass and self.tail_floor is not None and threshold > self.tail_floor:
            tail = threshold**power * self.tail_mass
        return Moment(total, tail)

    def tail_measure(self, level):
        listed = sum((m for m, v in zip(self.measures, self.values, strict=True) if v > level), Fraction(0))
        return listed + self.tail_mass


@dataclass(frozen=True)
class SystemModel:
    """A measure preserving symbolic system and an observable constant on its cells.

    ``observable`` names the observable ("digit", "reciprocal", "indicator",
    "cylinder", "constant" or "state"); ``level`` is the word length of a
    dyadic cylinder partition and 0 otherwise.
    """

    kind: SystemKind
    partition: Partition
    observable: str
    transition: tuple[tuple[Fraction, ...], ...] | None = None
    level: int = 0
    name: str = field(default="", compare=False)

    def cell_measure(self, i: int) -> Number:
        return self.partition.measure(i)

    def observable_value(self, i: int) -> Number:
        return self.partition.value(i)

    def integral(self) -> Number:
        """Integral of the observable; only meaningful for bounded observables."""
        return self.partition.truncated_moment(math.inf, 1).value


def validate_system(system: SystemModel) -> None:
    """Check that cell measures are positive, sum to one, and values are non-negative."""
    partition = system.partition
    masses = [partition.tail_mass]
    for i in partition.cells():
        m = partition.measure(i)
        if m <= 0:
            raise InvalidSystem(f"cell {i} has non-positive measure {m}")
        if partition.value(i) < 0:
            raise InvalidSystem(f"cell {i} has negative observable value")
        masses.append(m)
    if all(isinstance(m, (int, Fraction)) for m in masses):
        total = sum(masses, Fraction(0))
        if total != 1:
            raise InvalidSystem(f"cell measures sum to {total}, not 1")
    elif abs(math.fsum(masses) - 1) > 1e-12:
        raise InvalidSystem(f"cell measures sum to {math.fsum(masses)!r}, not 1")


@dataclass(frozen=True)
class OrbitDigits:
    """Symbols i_0..i_{N-1} of an orbit and the observable values along it."""

    symbols: tuple[int, ...]
    values: tuple[Number, ...]
    exact: bool = True
    bits_consumed: int = 0

    def __len__(self):
        return len(self.symbols)


def bit_budget(n: int) -> int:
    return settings.BITS_PER_SYMBOL_BUDGET * n + settings.BUDGET_SLACK_BITS
