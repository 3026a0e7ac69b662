"""Exact symbolic orbits and cylinder measures for the supported systems."""

from trim_ergodic.exceptions import InvalidSymbol
from trim_ergodic.reals import (
    ExactRational,
    LazyUniformReal,
    QuadraticIrrational,
    parse_real,
    sample_real,
)
from trim_ergodic.systems.base import OrbitDigits, SystemKind, SystemModel, validate_system
from trim_ergodic.systems.doubling import (
    ReciprocalPartition,
    doubling_orbit,
    doubling_reciprocal_system,
    doubling_system,
    dyadic_word_measure,
    interval_word_measure,
)
from trim_ergodic.systems.gauss import (
    convergents,
    gauss_cylinder_measure,
    gauss_digits,
    gauss_measure,
    gauss_system,
)
from trim_ergodic.systems.markov import markov_orbit, markov_system, markov_word_measure

__all__ = [
    "ExactRational",
    "LazyUniformReal",
    "OrbitDigits",
    "QuadraticIrrational",
    "convergents",
    "cylinder_measure",
    "doubling_orbit",
    "doubling_reciprocal_system",
    "doubling_system",
    "gauss_digits",
    "gauss_measure",
    "gauss_system",
    "markov_orbit",
    "markov_system",
    "orbit",
    "parse_real",
    "sample_real",
    "validate_system",
]


def orbit(system: SystemModel, x, n: int, method: str | None = None) -> OrbitDigits:
    """First ``n`` symbols of the orbit of ``x`` under ``system``."""
    match system.kind:
        case SystemKind.GAUSS:
            return gauss_digits(x, n, method=method)
        case SystemKind.DOUBLING:
            return doubling_orbit(x, n, system)
        case SystemKind.MARKOV:
            return markov_orbit(system, x, n)
    raise ValueError(f"unsupported system kind {system.kind!r}")


def cylinder_measure(system: SystemModel, word):
    """Measure of the cylinder {x : i_n(x) = word[n] for n < len(word)}.

    Exact Fractions for doubling and Markov systems, an mpmath value for the
    Gauss map.
    """
    word = list(word)
    match system.kind:
        case SystemKind.GAUSS:
            return gauss_cylinder_measure(word)
        case SystemKind.DOUBLING if isinstance(system.partition, ReciprocalPartition):
            return interval_word_measure(word, system.partition)
        case SystemKind.DOUBLING:
            return dyadic_word_measure(word, system.level)
        case SystemKind.MARKOV:
            return markov_word_measure(system, word)
    raise InvalidSymbol(f"no cylinders for {system.kind!r}")

