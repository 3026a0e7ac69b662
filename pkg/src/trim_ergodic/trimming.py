"""Birkhoff sums with at most one term removed.

At horizon N the largest of the first N values is removed when at least one of
them exceeds the cutoff tau(N); ties remove the earliest occurrence only.
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from trim_ergodic.dynamics import orbit
from trim_ergodic.exceptions import NegativeValue
from trim_ergodic.mainterm import TailProfile, tau

_FLOAT64_EXACT_INTS = 2**53


@dataclass(frozen=True)
class TrimmedSum:
    n: int
    raw_sum: int | float | Fraction
    max_term: int | float | Fraction
    argmax: int
    delta: int
    exceedances: int
    trimmed_sum: int | float | Fraction
    threshold: float = math.inf

    def row(self) -> dict:
        """The seed-free part of a trim row."""
        return {
            "N": self.n,
            "raw": self.raw_sum,
            "max": self.max_term,
            "argmax": self.argmax,
            "delta": self.delta,
            "exceedances": self.exceedances,
            "trimmed": self.trimmed_sum,
        }


def _as_list(values) -> list:
    if isinstance(values, np.ndarray):
        return values.tolist()
    return list(values)


def _check_non_negative(values: list) -> None:
    for n, v in enumerate(values):
        if v < 0:
            raise NegativeValue(f"value {v} at index {n} is negative")


def birkhoff_sum(values: Sequence):
    """Exact sum for ints and Fractions, compensated summation otherwise."""
    values = _as_list(values)
    _check_non_negative(values)
    if all(isinstance(v, (int, Fraction)) for v in values):
        return sum(values, 0)
    return math.fsum(values)


def trim(values: Sequence, threshold: float) -> TrimmedSum:
    if threshold < 0:
        raise ValueError(f"threshold must be non-negative, got {threshold}")
    values = _as_list(values)
    raw = birkhoff_sum(values)
    if not values:
        return TrimmedSum(0, raw, 0, -1, 0, 0, raw, threshold)
    argmax = max(range(len(values)), key=values.__getitem__)
    max_term = values[argmax]
    exceedances = sum(1 for v in values if v > threshold)
    delta = 1 if exceedances else 0
    return TrimmedSum(len(values), raw, max_term, argmax, delta, exceedances, raw - delta * max_term, threshold)


def _check_grid(grid: Sequence[int], length: int) -> list[int]:
    grid = [int(n) for n in grid]
    if not grid or grid[0] < 1 or any(b <= a for a, b in zip(grid, grid[1:], strict=False)):
        raise ValueError(f"grid must be strictly increasing and positive, got {grid}")
    if grid[-1] > length:
        raise ValueError(f"grid reaches N={grid[-1]} but only {length} values are available")
    return grid


def _fits_float64(value) -> bool:
    if isinstance(value, float):
        return True
    return isinstance(value, (int, np.integer)) and abs(int(value)) <= _FLOAT64_EXACT_INTS


def exceedance_counts(values: Sequence, grid: Sequence[int], thresholds: Sequence[float]) -> list[int]:
    """#{n < N : values[n] > thresholds[k]} for each grid point N = grid[k]."""
    values = _as_list(values)
    grid = _check_grid(grid, len(values))
    # Fractions and ints past 2**53 are compared as Python objects
    dtype = np.float64 if all(_fits_float64(v) for v in values) else object
    array = np.asarray(values, dtype=dtype)
    return [int(np.count_nonzero(array[:n] > t)) for n, t in zip(grid, thresholds, strict=True)]


def trim_along_grid(values: Sequence, grid: Sequence[int], thresholds: Sequence[float]) -> list[TrimmedSum]:
    """trim(values[:N], thresholds[k]) for every N = grid[k], in a single pass."""
    values = _as_list(values)
    _check_non_negative(values)
    grid = _check_grid(grid, len(values))
    counts = exceedance_counts(values, grid, thresholds)
    exact = all(isinstance(v, (int, Fraction)) for v in values)
    results = []
    raw, max_term, argmax, start = 0, values[0], 0, 0
    for n, threshold, exceedances in zip(grid, thresholds, counts, strict=True):
        chunk = values[start:n]
        raw = raw + (sum(chunk, 0) if exact else math.fsum(chunk))
        for offset, v in enumerate(chunk):
            if v > max_term:
                max_term, argmax = v, start + offset
        start = n
        delta = 1 if exceedances else 0
        results.append(TrimmedSum(n, raw, max_term, argmax, delta, exceedances, raw - delta * max_term, threshold))
    return results


def thresholded_sum(values: Sequence, threshold: float):
    """Sum of the values that do not exceed ``threshold``."""
    return birkhoff_sum([v for v in _as_list(values) if v <= threshold])


def phi_aggregate(system, profile: TailProfile, x, n: int):
    """Sum over m < N of f(T^m x) * [f(T^m x) <= tau(N)].

    The truncation family f_k = f * [tau(k-1) < f <= tau(k)], k = 1..N, sums
    to f * [f <= tau(N)], so the double sum collapses to one threshold.
    """
    if n < 2:
        raise ValueError(f"the aggregate needs N >= 2, got {n}")
    return thresholded_sum(orbit(system, x, n).values, tau(profile, n))


def truncation_family_sum(values: Sequence, cutoffs: Sequence[float]):
    """Brute-force double sum over m < N and k = 1..N of f_k(T^m x).

    ``cutoffs[k]`` is tau(k) for k = 0..N with cutoffs[0] = cutoffs[1] = 0.
    """
    values = _as_list(values)
    _check_non_negative(values)
    n = len(values)
    if len(cutoffs) != n + 1:
        raise ValueError(f"need {n + 1} cutoffs for {n} values, got {len(cutoffs)}")
    total = []
    for v in values:
        for k in range(1, n + 1):
            if cutoffs[k - 1] < v <= cutoffs[k]:
                total.append(v)
    return birkhoff_sum(total)


def aggregate_cutoffs(profile: TailProfile, n: int) -> list[float]:
    """tau(0..N) with tau(0) = tau(1) = 0."""
    return [0.0, 0.0] + [tau(profile, k) for k in range(2, n + 1)]


def exceedance_curve(system, profile: TailProfile, x, grid: Sequence[int]) -> list[int]:
    """Exceedance counts against tau(N) along the grid, from one orbit."""
    grid = [int(n) for n in grid]
    if not grid or grid[0] < 2:
        raise ValueError("exceedance curves start at N >= 2")
    values = orbit(system, x, grid[-1]).values
    return exceedance_counts(values, grid, [tau(profile, n) for n in grid])


def neighbour_ratio(values: Sequence, n: int) -> float | None:
    """f(T^(argmax+1) x) / max over the first N values; None without a successor."""
    values = _as_list(values)
    head = values[:n]
    if not head:
        return None
    argmax = max(range(len(head)), key=head.__getitem__)
    if argmax + 1 >= len(values) or head[argmax] == 0:
        return None
    return float(Fraction(values[argmax + 1]) / Fraction(head[argmax]))
