# Symbolic systems: one module per map, each providing its partition, a
# system factory and an exact orbit builder.

from trim_ergodic.systems.base import (
    FinitePartition,
    Moment,
    OrbitDigits,
    Partition,
    SystemKind,
    SystemModel,
    validate_system,
)
from trim_ergodic.systems.doubling import doubling_reciprocal_system, doubling_system
from trim_ergodic.systems.gauss import gauss_system
from trim_ergodic.systems.markov import markov_system

__all__ = [
    "FinitePartition",
    "Moment",
    "OrbitDigits",
    "Partition",
    "SystemKind",
    "SystemModel",
    "doubling_reciprocal_system",
    "doubling_system",
    "gauss_system",
    "markov_system",
    "validate_system",
]
