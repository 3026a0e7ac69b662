"""Stationary finite-state Markov shifts with exact rational transition matrices."""

import bisect
import itertools
import logging
from fractions import Fraction

from trim_ergodic import settings
from trim_ergodic.exceptions import InvalidSymbol, InvalidSystem, RefinementBudgetExceeded
from trim_ergodic.reals import RealSource
from trim_ergodic.systems.base import (
    FinitePartition,
    OrbitDigits,
    SystemKind,
    SystemModel,
    bit_budget,
)

logger = logging.getLogger(__name__)

Matrix = tuple[tuple[Fraction, ...], ...]


def as_matrix(rows) -> Matrix:
    """Validate a stochastic matrix and convert its entries to Fractions."""
    try:
        matrix = tuple(tuple(Fraction(entry) for entry in row) for row in rows)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise InvalidSystem(f"transition matrix has a non-numeric entry: {exc}") from exc
    size = len(matrix)
    if size == 0:
        raise InvalidSystem("transition matrix is empty")
    for i, row in enumerate(matrix):
        if len(row) != size:
            raise InvalidSystem(f"row {i} has {len(row)} entries, expected {size}")
        if any(entry < 0 for entry in row):
            raise InvalidSystem(f"row {i} has a negative entry")
        if sum(row) != 1:
            raise InvalidSystem(f"row {i} sums to {sum(row)}, not 1")
    return matrix


def parse_matrix(text: str) -> Matrix:
    """Parse ``"1/2,1/2;1/3,2/3"``: rows separated by semicolons."""
    return as_matrix(row.split(",") for row in text.strip().split(";"))


def stationary_distribution(rows) -> tuple[Fraction, ...]:
    """The unique pi with pi P = pi and sum(pi) = 1, by exact Gaussian elimination."""
    matrix = as_matrix(rows)
    size = len(matrix)
    # (P^T - I) pi = 0 with the last equation replaced by sum(pi) = 1
    system = [
        [matrix[j][i] - (1 if i == j else 0) for j in range(size)] + [Fraction(0)]
        for i in range(size - 1)
    ]
    system.append([Fraction(1)] * size + [Fraction(1)])
    for col in range(size):
        pivot = next((r for r in range(col, size) if system[r][col] != 0), None)
        if pivot is None:
            raise InvalidSystem("transition matrix has no unique stationary distribution")
        system[col], system[pivot] = system[pivot], system[col]
        head = system[col][col]
        system[col] = [entry / head for entry in system[col]]
        for r in range(size):
            if r != col and system[r][col] != 0:
                factor = system[r][col]
                system[r] = [a - factor * b for a, b in zip(system[r], system[col], strict=True)]
    return tuple(row[-1] for row in system)


def mat_mul(left: Matrix, right: Matrix) -> Matrix:
    columns = list(zip(*right, strict=True))
    return tuple(
        tuple(sum((a * b for a, b in zip(row, col, strict=True)), Fraction(0)) for col in columns)
        for row in left
    )


def matrix_powers(matrix: Matrix, n_max: int) -> list[Matrix]:
    """[P^0, P^1, ..., P^n_max]."""
    size = len(matrix)
    identity = tuple(tuple(Fraction(int(i == j)) for j in range(size)) for i in range(size))
    powers = [identity]
    for _ in range(n_max):
        powers.append(mat_mul(powers[-1], matrix))
    return powers


def markov_system(rows, values=None) -> SystemModel:
    """Stationary Markov shift; the observable takes ``values[i]`` on state i (default i)."""
    matrix = as_matrix(rows)
    pi = stationary_distribution(matrix)
    if any(p <= 0 for p in pi):
        raise InvalidSystem("stationary distribution has a zero entry; the chain is not irreducible")
    logger.debug("stationary distribution %s", [str(p) for p in pi])
    values = tuple(range(len(matrix))) if values is None else tuple(values)
    return SystemModel(
        kind=SystemKind.MARKOV,
        partition=FinitePartition(measures=pi, values=values),
        observable="state",
        transition=matrix,
        name=f"markov-{len(matrix)}",
    )


def markov_word_measure(system: SystemModel, word) -> Fraction:
    """pi_{w_0} * P[w_0][w_1] * ... * P[w_{k-2}][w_{k-1}]."""
    size = len(system.transition)
    for s in word:
        if not isinstance(s, int) or not 0 <= s < size:
            raise InvalidSymbol(f"{s!r} is not a state of a {size}-state chain")
    if not word:
        return Fraction(1)
    measure = system.partition.measures[word[0]]
    for i, j in itertools.pairwise(word):
        measure *= system.transition[i][j]
    return measure


def _draw(source: RealSource, cursor: int, cumulative: list[Fraction], budget: int, done: int):
    """Index j with cumulative[j] <= u < cumulative[j+1] for a fresh uniform u at ``cursor``."""
    chunk = settings.UNIFORM_CHUNK_BITS
    length = chunk
    k = source.window(cursor, chunk)
    while True:
        low, high = Fraction(k, 1 << length), Fraction(k + 1, 1 << length)
        j = bisect.bisect_right(cumulative, low) - 1
        if high <= cumulative[j + 1]:
            return j, length
        if cursor + length + chunk > budget:
            raise RefinementBudgetExceeded(budget, done)
        k = (k << chunk) | source.window(cursor + length, chunk)
        length += chunk


def markov_orbit(system: SystemModel, x: RealSource, n: int) -> OrbitDigits:
    """Stationary Markov path: first state from pi, each next one from the current row."""
    if system.kind is not SystemKind.MARKOV:
        raise ValueError(f"{system.kind} is not a Markov system")
    if n < 1:
        raise ValueError(f"need at least one step, got n={n}")
    budget = bit_budget(n)
    initial = list(itertools.accumulate(system.partition.measures, initial=Fraction(0)))
    rows = [list(itertools.accumulate(row, initial=Fraction(0))) for row in system.transition]
    cursor = 0
    state, used = _draw(x, cursor, initial, budget, 0)
    cursor += used
    symbols = [state]
    while len(symbols) < n:
        state, used = _draw(x, cursor, rows[state], budget, len(symbols))
        cursor += used
        symbols.append(state)
    values = tuple(system.partition.values[s] for s in symbols)
    return OrbitDigits(tuple(symbols), values, exact=True, bits_consumed=cursor)
