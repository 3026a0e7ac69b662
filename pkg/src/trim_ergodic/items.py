# Row types written by the pipelines
#
# Every item declares its COLUMNS in output order together with their SQLite
# types, and the TABLE it is stored in. Fraction-valued fields stay exact: they
# are written as "p/q" strings to JSON and SQLite and as floats to CSV.

from dataclasses import astuple, dataclass
from fractions import Fraction


@dataclass(frozen=True)
class TrimRow:
    """One sample at one horizon of a trim experiment."""

    TABLE = "trim_rows"
    COLUMNS = (
        ("seed", "INTEGER"),
        ("N", "INTEGER"),
        ("raw", "INTEGER"),
        ("max", "INTEGER"),
        ("argmax", "INTEGER"),
        ("delta", "INTEGER"),
        ("exceedances", "INTEGER"),
        ("trimmed", "INTEGER"),
        ("main_term", "TEXT"),
        ("error", "TEXT"),
        ("normalized_error", "REAL"),
    )

    seed: int
    n: int
    raw: int | Fraction
    max_term: int | Fraction
    argmax: int
    delta: int
    exceedances: int
    trimmed: int | Fraction
    main_term: Fraction
    error: Fraction
    normalized_error: float

    def values(self) -> tuple:
        return astuple(self)


@dataclass(frozen=True)
class SampleRecord:
    """All grid rows of one seed, or the reason the sample failed."""

    seed: int
    rows: tuple[TrimRow, ...] = ()
    failure: str | None = None


@dataclass(frozen=True)
class ClassicalRow:
    TABLE = "classical_rows"
    COLUMNS = (
        ("seed", "INTEGER"),
        ("N", "INTEGER"),
        ("average", "TEXT"),
        ("deviation", "TEXT"),
    )

    seed: int
    n: int
    average: Fraction
    deviation: Fraction

    def values(self) -> tuple:
        return astuple(self)


@dataclass(frozen=True)
class DispersionRow:
    TABLE = "dispersion_rows"
    COLUMNS = (
        ("N", "INTEGER"),
        ("median", "REAL"),
        ("iqr", "REAL"),
        ("max_over_median", "REAL"),
        ("iqr_over_median", "REAL"),
        ("neighbour_ratio", "REAL"),
    )

    n: int
    median: float
    iqr: float
    max_over_median: float
    iqr_over_median: float
    neighbour_ratio: float

    def values(self) -> tuple:
        return astuple(self)


@dataclass(frozen=True)
class MainTermRow:
    TABLE = "main_term_rows"
    COLUMNS = (
        ("N", "INTEGER"),
        ("F1", "REAL"),
        ("F2", "REAL"),
        ("G", "REAL"),
        ("F3", "REAL"),
        ("tau", "REAL"),
    )

    n: int
    f1: float
    f2: float
    g_cum: float
    f3: float
    tau: float

    def values(self) -> tuple:
        return astuple(self)


@dataclass(frozen=True)
class MixingRow:
    TABLE = "mixing_rows"
    COLUMNS = (
        ("N", "INTEGER"),
        ("g", "REAL"),
        ("G", "REAL"),
        ("mode", "TEXT"),
        ("extrapolated", "INTEGER"),
    )

    n: int
    g: float
    g_cum: float
    mode: str
    extrapolated: int = 0

    def values(self) -> tuple:
        return astuple(self)


ROW_TYPES = {row_type.TABLE: row_type for row_type in (TrimRow, ClassicalRow, DispersionRow, MainTermRow, MixingRow)}


def column_names(row_type) -> list[str]:
    return [name for name, _ in row_type.COLUMNS]
