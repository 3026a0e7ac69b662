"""Correlation sums over partition cells and the bound g(N) built from them.

For cells A_i, A_j the correlation sum up to N is

    sum_{n=0}^{N} ( mu(A_i ∩ T^{-n} A_j) / (mu(A_i) mu(A_j)) - 1 )

It is computed exactly for doubling and Markov systems and estimated from a
long orbit otherwise. The n = 0 term is the deterministic self-overlap
delta_ij / mu(A_i) - 1; the rest is called the mixing part.
"""

import functools
import itertools
import logging
import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from trim_ergodic import settings
from trim_ergodic.dynamics import orbit as build_orbit
from trim_ergodic.dynamics import sample_real
from trim_ergodic.exceptions import InsufficientOrbit
from trim_ergodic.systems.base import OrbitDigits, SystemKind, SystemModel
from trim_ergodic.systems.doubling import preimage_overlap
from trim_ergodic.systems.markov import mat_mul, matrix_powers

logger = logging.getLogger(__name__)

MODES = ("exact", "empirical", "asserted")


@dataclass(frozen=True)
class MixingProfile:
    """g(0..horizon); beyond the horizon g keeps its last value.

    Exact profiles stop once the remaining terms vanish or fall below float
    resolution, so their last value is the limit. ``extrapolated_from`` is the
    first N whose value was carried forward without being computed.

    ``certificate`` lists (i, j, worst correlation sum) for every pair of cells
    that entered the maximum.
    """

    mode: str
    g_values: tuple[float, ...]
    cell_cap: int = 0
    certificate: tuple[tuple[int, int, float], ...] = ()
    standard_errors: tuple[float, ...] = ()
    extrapolated_from: int | None = None

    @classmethod
    def asserted(cls, constant: float = settings.ASSERTED_G_CONSTANT) -> "MixingProfile":
        if constant < 0:
            raise ValueError(f"g must be non-negative, got {constant}")
        return cls("asserted", (float(constant),))

    @property
    def horizon(self) -> int:
        return len(self.g_values) - 1

    def g(self, n: int) -> float:
        if n < 0:
            raise ValueError(f"g is defined for N >= 0, got {n}")
        return self.g_values[min(n, self.horizon)]

    @functools.cached_property
    def _prefix(self) -> tuple[float, ...]:
        return tuple(itertools.accumulate(self.g_values[1:]))

    def cumulative(self, n: int) -> float:
        """G(N) = g(1) + ... + g(N)."""
        if n <= 0:
            return 0.0
        inside = min(n, self.horizon)
        head = self._prefix[inside - 1] if inside else 0.0
        return head + (n - inside) * self.g_values[-1]

    def is_extrapolated(self, n: int) -> bool:
        return self.extrapolated_from is not None and n >= self.extrapolated_from

    def rows(self, grid: Sequence[int]):
        """(N, g, G, mode, extrapolated) per grid point."""
        return [(n, self.g(n), self.cumulative(n), self.mode, int(self.is_extrapolated(n))) for n in grid]


@dataclass(frozen=True)
class CorrelationSum:
    value: Fraction | float
    mixing_part: Fraction | float
    standard_error: float = 0.0
    terms: tuple = field(default=(), repr=False)


def _default_mode(system: SystemModel) -> str:
    return "asserted" if system.kind is SystemKind.GAUSS else "exact"


def _exact_levels(system: SystemModel, cells: Sequence[int]) -> Iterator[list[list[Fraction]]]:
    """terms[a][b] for cells[a], cells[b] and n = 0, 1, 2, ..."""
    partition = system.partition
    measures = [Fraction(partition.measure(i)) for i in cells]
    match system.kind:
        case SystemKind.MARKOV:
            power = matrix_powers(system.transition, 0)[0]
            while True:
                yield [[power[i][j] / measures[b] - 1 for b, j in enumerate(cells)] for i in cells]
                power = mat_mul(power, system.transition)
        case SystemKind.DOUBLING:
            intervals = [partition.interval(i) for i in cells]
            for n in itertools.count():
                yield [
                    [
                        preimage_overlap(first, n, second) / (measures[a] * measures[b]) - 1
                        for b, second in enumerate(intervals)
                    ]
                    for a, first in enumerate(intervals)
                ]
    raise ValueError(f"no exact correlations for {system.kind}; use the empirical mode")


def _exact_terms(system: SystemModel, cells: Sequence[int], horizon: int) -> list[list[list[Fraction]]]:
    """terms[n][a][b] for cells[a], cells[b] and n = 0..horizon."""
    return list(itertools.islice(_exact_levels(system, cells), horizon + 1))


def _settled_exact_terms(system: SystemModel, cells: Sequence[int], horizon: int) -> np.ndarray:
    """Exact terms as floats for n = 0..horizon, cut short once two levels in a row are negligible."""
    levels = []
    sums = np.zeros((len(cells), len(cells)))
    quiet = 0
    for level in itertools.islice(_exact_levels(system, cells), horizon + 1):
        values = np.array(level, dtype=float)
        levels.append(values)
        sums += values
        negligible = np.abs(values) <= settings.SETTLED_TERM_RATIO * np.maximum(1.0, np.abs(sums))
        quiet = quiet + 1 if negligible.all() else 0
        if quiet == 2:
            logger.debug("correlation terms of %s settled at n=%d", system.name, len(levels) - 1)
            break
    return np.stack(levels)


def _symbols(orbit) -> np.ndarray:
    if isinstance(orbit, OrbitDigits):
        orbit = orbit.symbols
    return np.asarray(orbit, dtype=np.int64)


def _empirical_terms(system: SystemModel, cells: Sequence[int], horizon: int, orbit) -> tuple[np.ndarray, np.ndarray]:
    """Estimated terms and binomial standard errors, shape (horizon+1, C, C)."""
    symbols = _symbols(orbit)
    length = len(symbols)
    if length < settings.EMPIRICAL_ORBIT_FACTOR * max(horizon, 1):
        raise InsufficientOrbit(
            f"an orbit of {length} symbols is too short for N={horizon}; "
            f"need {settings.EMPIRICAL_ORBIT_FACTOR * max(horizon, 1)}"
        )
    size = len(cells)
    position = {cell: k + 1 for k, cell in enumerate(cells)}
    index = np.array([position.get(s, 0) for s in symbols.tolist()], dtype=np.int64)
    measures = np.array([float(system.partition.measure(i)) for i in cells])
    product = np.outer(measures, measures)
    terms = np.empty((horizon + 1, size, size))
    errors = np.zeros((horizon + 1, size, size))
    terms[0] = np.diag(1 / measures) - 1
    for n in range(1, horizon + 1):
        pairs = index[: length - n] * (size + 1) + index[n:]
        counts = np.bincount(pairs, minlength=(size + 1) ** 2).reshape(size + 1, size + 1)[1:, 1:]
        freq = counts / (length - n)
        terms[n] = freq / product - 1
        errors[n] = np.sqrt(freq * (1 - freq) / (length - n)) / product
    return terms, errors


def _default_orbit(system: SystemModel, horizon: int, seed: int | None):
    seed = settings.DEFAULT_BASE_SEED if seed is None else seed
    length = max(settings.EMPIRICAL_ORBIT_FACTOR * max(horizon, 1), 10**5)
    logger.info("generating a %d-symbol orbit for correlation estimates (seed %d)", length, seed)
    return build_orbit(system, sample_real(seed), length)


def correlation_terms(system: SystemModel, i: int, j: int, n: int, mode: str | None = None, orbit=None, seed=None):
    """Terms n' = 0..N of the correlation sum for cells i, j, with standard errors."""
    system.partition.check_cell(i)
    system.partition.check_cell(j)
    mode = mode or ("empirical" if system.kind is SystemKind.GAUSS else "exact")
    if mode == "exact":
        terms = _exact_terms(system, [i, j], n)
        return [level[0][1] for level in terms], [0.0] * (n + 1)
    if orbit is None:
        orbit = _default_orbit(system, n, seed)
    cells = [i] if i == j else [i, j]
    terms, errors = _empirical_terms(system, cells, n, orbit)
    b = 0 if i == j else 1
    return terms[:, 0, b].tolist(), errors[:, 0, b].tolist()


def correlation_sum(system: SystemModel, i: int, j: int, n: int, mode: str | None = None, orbit=None, seed=None) -> CorrelationSum:
    terms, errors = correlation_terms(system, i, j, n, mode, orbit, seed)
    if all(isinstance(t, Fraction) for t in terms):
        value, mixing = sum(terms, Fraction(0)), sum(terms[1:], Fraction(0))
    else:
        value, mixing = math.fsum(terms), math.fsum(terms[1:])
    error = math.sqrt(math.fsum(e * e for e in errors))
    return CorrelationSum(value, mixing, error, tuple(terms))


def _term_tensor(system, cells, horizon, mode, orbit, seed):
    if mode == "exact":
        terms = _settled_exact_terms(system, cells, horizon)
        return terms, np.zeros_like(terms)
    if orbit is None:
        orbit = _default_orbit(system, horizon, seed)
    return _empirical_terms(system, cells, horizon, orbit)


def estimate_g(
    system: SystemModel,
    n_max: int,
    cell_cap: int,
    mode: str | None = None,
    orbit=None,
    seed: int | None = None,
    constant: float | None = None,
) -> MixingProfile:
    """g(N) = max over cells i, j <= cell_cap of the correlation sum, clamped at 0."""
    if cell_cap < 1:
        raise ValueError(f"cell_cap must be at least 1, got {cell_cap}")
    mode = mode or _default_mode(system)
    if mode not in MODES:
        raise ValueError(f"unknown mixing mode {mode!r}, expected one of {MODES}")
    if mode == "asserted":
        return MixingProfile.asserted(settings.ASSERTED_G_CONSTANT if constant is None else constant)
    horizon = n_max if mode == "exact" else min(n_max, settings.MIXING_HORIZON)
    cells = list(system.partition.cells(cell_cap))
    terms, errors = _term_tensor(system, cells, horizon, mode, orbit, seed)
    extrapolated_from = None
    if mode == "empirical" and n_max > horizon:
        extrapolated_from = horizon + 1
        logger.warning("empirical g stops at N=%d; values up to N=%d repeat g(%d)", horizon, n_max, horizon)
    horizon = len(terms) - 1
    sums = np.cumsum(terms, axis=0)
    variances = np.cumsum(errors**2, axis=0)
    flat = sums.reshape(horizon + 1, -1)
    best = flat.argmax(axis=1)
    g_values = tuple(max(float(flat[n, k]), 0.0) for n, k in enumerate(best))
    standard_errors = tuple(float(np.sqrt(variances.reshape(horizon + 1, -1)[n, k])) for n, k in enumerate(best))
    worst = sums.max(axis=0)
    certificate = tuple(
        sorted(
            ((cells[a], cells[b], float(worst[a, b])) for a in range(len(cells)) for b in range(len(cells))),
            key=lambda row: -row[2],
        )
    )
    logger.info("estimated g for %s up to N=%d over %d cells (%s)", system.name, horizon, len(cells), mode)
    return MixingProfile(
        mode,
        g_values,
        cell_cap,
        certificate,
        standard_errors if mode == "empirical" else (),
        extrapolated_from,
    )


@dataclass(frozen=True)
class UniformityReport:
    n: int
    cell_cap: int
    cells: tuple[int, ...]
    sums: tuple[tuple[float, ...], ...]
    mixing: tuple[tuple[float, ...], ...]
    max_sum: float
    max_mixing: float
    max_mixing_error: float
    half_cap: int
    half_max_mixing: float
    half_max_mixing_error: float
    drifts: bool


def uniformity_report(
    system: SystemModel, n: int, cell_cap: int, mode: str | None = None, orbit=None, seed: int | None = None
) -> UniformityReport:
    """Correlation sums for all cell pairs up to ``cell_cap`` and a drift check at half the cap.

    The mixing part drifts when its maximum at the full cap exceeds the one at
    half the cap by more than three standard errors on each side.
    """
    if cell_cap < 1:
        raise ValueError(f"cell_cap must be at least 1, got {cell_cap}")
    mode = mode or ("empirical" if system.kind is SystemKind.GAUSS else "exact")
    if mode == "asserted":
        raise ValueError("an asserted profile has no correlation sums to report")
    cells = list(system.partition.cells(cell_cap))
    terms, errors = _term_tensor(system, cells, n, mode, orbit, seed)
    sums = terms.sum(axis=0)
    mixing = terms[1:].sum(axis=0)
    mixing_errors = np.sqrt((errors[1:] ** 2).sum(axis=0))

    def peak(size):
        block = mixing[:size, :size]
        a, b = np.unravel_index(block.argmax(), block.shape)
        return float(block[a, b]), float(mixing_errors[a, b])

    half = max(1, len(cells) // 2)
    top, top_error = peak(len(cells))
    half_top, half_error = peak(half)
    drifts = top - 3 * top_error > half_top + 3 * half_error
    if drifts:
        logger.warning("correlation sums of %s grow with the cell cap (%g vs %g)", system.name, top, half_top)
    return UniformityReport(
        n=n,
        cell_cap=cell_cap,
        cells=tuple(cells),
        sums=tuple(tuple(float(v) for v in row) for row in sums),
        mixing=tuple(tuple(float(v) for v in row) for row in mixing),
        max_sum=float(sums.max()),
        max_mixing=top,
        max_mixing_error=top_error,
        half_cap=half,
        half_max_mixing=half_top,
        half_max_mixing_error=half_error,
        drifts=bool(drifts),
    )
