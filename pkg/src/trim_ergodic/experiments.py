"""Seeded Monte Carlo runs over many random starting points.

Each sample is one seed: the orbit is built once up to the largest grid point
and every grid horizon is evaluated on its prefix. Samples are independent and
run in a process pool; results are merged in seed order, so the number of
workers never changes the output.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
from scipy import stats

from trim_ergodic import settings
from trim_ergodic.dynamics import orbit, sample_real
from trim_ergodic.exceptions import ConfigError, DegenerateFit, TrimErgodicError
from trim_ergodic.items import ClassicalRow, DispersionRow, SampleRecord, TrimRow
from trim_ergodic.mainterm import MainTermTable, TailProfile, build_main_terms, error_scale, tau
from trim_ergodic.mixing import MixingProfile, estimate_g
from trim_ergodic.systems import (
    SystemModel,
    doubling_reciprocal_system,
    doubling_system,
    gauss_system,
    markov_system,
)
from trim_ergodic.systems.markov import parse_matrix
from trim_ergodic.trimming import neighbour_ratio, trim_along_grid

logger = logging.getLogger(__name__)

SYSTEMS = ("gauss", "doubling", "markov")
OBSERVABLES = ("digit", "reciprocal", "indicator", "cylinder", "constant", "state")
NORMALIZATIONS = ("n-log-n", "n-squared", "main-term")
_DEFAULT_OBSERVABLE = {"gauss": "digit", "doubling": "reciprocal", "markov": "state"}


@dataclass(frozen=True)
class ExperimentConfig:
    system: str = "gauss"
    observable: str | None = None
    profile: TailProfile = field(default_factory=TailProfile)
    grid: tuple[int, ...] = settings.DEFAULT_GRID
    samples: int = settings.DEFAULT_SAMPLES
    base_seed: int = settings.DEFAULT_BASE_SEED
    gmode: str | None = None
    gcap: int = 10
    g_constant: float = settings.ASSERTED_G_CONSTANT
    method: str | None = None
    level: int = 1
    values: tuple[Fraction, ...] | None = None
    constant: Fraction = Fraction(1)
    transition: str | None = None
    normalization: str = "n-log-n"
    threads: int = 1

    def __post_init__(self):
        if self.system not in SYSTEMS:
            raise ConfigError(f"unknown system {self.system!r}, expected one of {SYSTEMS}")
        if self.observable is not None and self.observable not in OBSERVABLES:
            raise ConfigError(f"unknown observable {self.observable!r}, expected one of {OBSERVABLES}")
        grid = tuple(int(n) for n in self.grid)
        if not grid or grid[0] < 2 or any(b <= a for a, b in zip(grid, grid[1:], strict=False)):
            raise ConfigError(f"the N grid must be strictly increasing with N >= 2, got {grid}")
        object.__setattr__(self, "grid", grid)
        if self.samples < 1:
            raise ConfigError(f"need at least one sample, got {self.samples}")
        if self.normalization not in NORMALIZATIONS:
            raise ConfigError(f"unknown normalization {self.normalization!r}, expected one of {NORMALIZATIONS}")
        if self.threads < 1:
            raise ConfigError(f"threads must be positive, got {self.threads}")

    @property
    def observable_name(self) -> str:
        return self.observable or _DEFAULT_OBSERVABLE[self.system]

    def header(self) -> dict:
        """The effective configuration as plain JSON values."""
        header = asdict(self)
        header["observable"] = self.observable_name
        header["grid"] = list(self.grid)
        header["values"] = None if self.values is None else [str(v) for v in self.values]
        header["constant"] = str(self.constant)
        header.pop("threads")
        return header


def build_system(config: ExperimentConfig) -> SystemModel:
    observable = config.observable_name
    match config.system, observable:
        case "gauss", "digit":
            return gauss_system()
        case "doubling", "reciprocal":
            return doubling_reciprocal_system()
        case "doubling", "indicator":
            return doubling_system(config.level)
        case "doubling", "cylinder":
            if config.values is None:
                raise ConfigError("the cylinder observable needs --values")
            return doubling_system(config.level, config.values)
        case "doubling", "constant":
            return doubling_system(1, (config.constant, config.constant))
        case "markov", "state":
            if config.transition is None:
                raise ConfigError("a Markov system needs --transition")
            return markov_system(parse_matrix(config.transition), config.values)
    raise ConfigError(f"observable {observable!r} is not available for the {config.system} system")


def build_mixing(config: ExperimentConfig, system: SystemModel) -> MixingProfile:
    return estimate_g(
        system, config.grid[-1], config.gcap, mode=config.gmode, seed=config.base_seed, constant=config.g_constant
    )


def derive_seed(base_seed: int, index: int) -> int:
    """Seed of sample ``index``: a SeedSequence over (base_seed, index), so sample sets can be extended."""
    state = np.random.SeedSequence([base_seed, index]).generate_state(1, np.uint64)
    return int(state[0])


def sample_seeds(config: ExperimentConfig) -> list[int]:
    return [derive_seed(config.base_seed, index) for index in range(config.samples)]


def _orbit_values(config: ExperimentConfig, system: SystemModel, seed: int, extra: int = 0) -> list:
    return list(orbit(system, sample_real(seed), config.grid[-1] + extra, method=config.method).values)


def _map_samples(worker, tasks: list, threads: int) -> list:
    """worker(task) for every task, in task order."""
    if threads <= 1 or len(tasks) <= 1:
        return [worker(task) for task in tasks]
    chunksize = max(1, len(tasks) // (4 * threads))
    with ProcessPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(worker, tasks, chunksize=chunksize))


def _log_samples(outcomes, label: str) -> None:
    total = len(outcomes)
    for number, outcome in enumerate(outcomes, start=1):
        if outcome.failure:
            logger.warning("%s sample %d/%d (seed %d) failed: %s", label, number, total, outcome.seed, outcome.failure)
        else:
            logger.info("%s sample %d/%d (seed %d) done", label, number, total, outcome.seed)


@dataclass(frozen=True)
class TrimResult:
    config: ExperimentConfig
    table: MainTermTable
    records: tuple[SampleRecord, ...]

    def rows(self) -> list[TrimRow]:
        return [row for record in self.records for row in record.rows]

    @property
    def failures(self) -> list[SampleRecord]:
        return [record for record in self.records if record.failure]


def _trim_sample(task) -> SampleRecord:
    config, system, table, scales, seed = task
    try:
        values = _orbit_values(config, system, seed)
    except TrimErgodicError as exc:
        return SampleRecord(seed, failure=f"{type(exc).__name__}: {exc}")
    rows = []
    for k, trimmed in enumerate(trim_along_grid(values, table.grid, table.tau)):
        n = trimmed.n
        main_term = Fraction(table.main_term(n))
        error = Fraction(trimmed.trimmed_sum) - main_term
        normalized = float(error) / scales[k] if scales[k] > 0 else math.nan
        rows.append(
            TrimRow(
                seed=seed,
                n=n,
                raw=trimmed.raw_sum,
                max_term=trimmed.max_term,
                argmax=trimmed.argmax,
                delta=trimmed.delta,
                exceedances=trimmed.exceedances,
                trimmed=trimmed.trimmed_sum,
                main_term=main_term,
                error=error,
                normalized_error=normalized,
            )
        )
    return SampleRecord(seed, tuple(rows))


def run_trim_experiment(config: ExperimentConfig, mixing: MixingProfile | None = None) -> TrimResult:
    """Trimmed sums, main terms N F1(N) and their errors for every seed and grid point."""
    system = build_system(config)
    mixing = mixing or build_mixing(config, system)
    table = build_main_terms(system, config.profile, mixing, config.grid)
    scales = error_scale(table)
    tasks = [(config, system, table, scales, seed) for seed in sample_seeds(config)]
    logger.info("trim experiment: %d samples of %s up to N=%d", len(tasks), system.name, config.grid[-1])
    records = _map_samples(_trim_sample, tasks, config.threads)
    _log_samples(records, "trim")
    return TrimResult(config, table, tuple(sorted(records, key=lambda record: record.seed)))


@dataclass(frozen=True)
class TrimSummary:
    n: int
    median_ratio: float
    iqr_ratio: float
    median_abs_error: float
    median_abs_raw_error: float
    median_abs_normalized_error: float
    multiple_exceedance_fraction: float


def _iqr(values) -> float:
    q1, q3 = np.percentile(values, [25, 75])
    return float(q3 - q1)


def summarize_trim(result: TrimResult) -> list[TrimSummary]:
    """Per grid point: spread of trimmed / (N F1), trimmed and untrimmed errors, multiple-exceedance rate."""
    summaries = []
    for n in result.table.grid:
        rows = [row for row in result.rows() if row.n == n]
        if not rows:
            continue
        main = result.table.main_term(n)
        ratios = [float(row.trimmed) / main for row in rows]
        summaries.append(
            TrimSummary(
                n=n,
                median_ratio=float(np.median(ratios)),
                iqr_ratio=_iqr(ratios),
                median_abs_error=float(np.median([abs(float(row.error)) for row in rows])),
                median_abs_raw_error=float(np.median([abs(float(row.raw) - main) for row in rows])),
                median_abs_normalized_error=float(np.nanmedian([abs(row.normalized_error) for row in rows])),
                multiple_exceedance_fraction=sum(row.exceedances >= 2 for row in rows) / len(rows),
            )
        )
    return summaries


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    standard_error: float
    intercept: float

    def band(self, z: float = 1.96) -> tuple[float, float]:
        return self.slope - z * self.standard_error, self.slope + z * self.standard_error


def fit_exponent(pairs) -> ExponentFit:
    """Least-squares slope of ln(magnitude) against ln(N)."""
    pairs = [(float(n), float(m)) for n, m in pairs]
    if len(pairs) < 3:
        raise ValueError(f"an exponent fit needs at least three points, got {len(pairs)}")
    if any(n <= 0 or m <= 0 for n, m in pairs):
        raise ValueError("exponent fits need positive N and magnitudes")
    x = np.log([n for n, _ in pairs])
    if np.ptp(x) == 0:
        raise DegenerateFit("all N are equal")
    fit = stats.linregress(x, np.log([m for _, m in pairs]))
    return ExponentFit(float(fit.slope), float(fit.stderr), float(fit.intercept))


@dataclass(frozen=True)
class ClassicalOutcome:
    seed: int
    rows: tuple[ClassicalRow, ...] = ()
    failure: str | None = None


@dataclass(frozen=True)
class ClassicalResult:
    config: ExperimentConfig
    integral: Fraction
    outcomes: tuple[ClassicalOutcome, ...]

    def rows(self) -> list[ClassicalRow]:
        return [row for outcome in self.outcomes for row in outcome.rows]


def _classical_sample(task) -> ClassicalOutcome:
    config, system, integral, seed = task
    try:
        values = _orbit_values(config, system, seed)
    except TrimErgodicError as exc:
        return ClassicalOutcome(seed, failure=f"{type(exc).__name__}: {exc}")
    rows, total, start = [], Fraction(0), 0
    for n in config.grid:
        total += sum((Fraction(v) for v in values[start:n]), Fraction(0))
        start = n
        average = total / n
        rows.append(ClassicalRow(seed, n, average, average - integral))
    return ClassicalOutcome(seed, tuple(rows))


def run_classical_experiment(config: ExperimentConfig) -> ClassicalResult:
    """Birkhoff averages of a bounded observable against its integral."""
    system = build_system(config)
    if system.partition.countable:
        raise ConfigError(f"the {config.observable_name} observable is not square integrable")
    integral = Fraction(system.integral())
    tasks = [(config, system, integral, seed) for seed in sample_seeds(config)]
    outcomes = _map_samples(_classical_sample, tasks, config.threads)
    _log_samples(outcomes, "classical")
    return ClassicalResult(config, integral, tuple(sorted(outcomes, key=lambda outcome: outcome.seed)))


def summarize_classical(result: ClassicalResult) -> list[tuple[int, float]]:
    """(N, median |average - integral|) per grid point."""
    summary = []
    for n in result.config.grid:
        deviations = [abs(float(row.deviation)) for row in result.rows() if row.n == n]
        if deviations:
            summary.append((n, float(np.median(deviations))))
    return summary


@dataclass(frozen=True)
class DispersionOutcome:
    seed: int
    normalized: tuple[float, ...] = ()
    neighbour_ratios: tuple[float | None, ...] = ()
    failure: str | None = None


@dataclass(frozen=True)
class DispersionReport:
    config: ExperimentConfig
    rows: tuple[DispersionRow, ...]
    outcomes: tuple[DispersionOutcome, ...]

    def iqr_over_median(self) -> dict[int, float]:
        return {row.n: row.iqr_over_median for row in self.rows}


def normalizer(config: ExperimentConfig, table: MainTermTable | None, n: int) -> float:
    match config.normalization:
        case "n-log-n":
            return n * math.log(n)
        case "n-squared":
            return float(n) * n
        case "main-term":
            return table.main_term(n)
    raise ConfigError(f"unknown normalization {config.normalization!r}")


def _dispersion_sample(task) -> DispersionOutcome:
    config, system, thresholds, norms, seed = task
    try:
        values = _orbit_values(config, system, seed, extra=1)
    except TrimErgodicError as exc:
        return DispersionOutcome(seed, failure=f"{type(exc).__name__}: {exc}")
    trims = trim_along_grid(values, config.grid, thresholds)
    normalized = tuple(float(t.trimmed_sum) / norm for t, norm in zip(trims, norms, strict=True))
    ratios = tuple(neighbour_ratio(values, n) for n in config.grid)
    return DispersionOutcome(seed, normalized, ratios)


def _safe_ratio(numerator: float, denominator: float) -> float:
    return numerator / denominator if denominator else math.nan


def run_counterexample(config: ExperimentConfig) -> DispersionReport:
    """Across-sample dispersion of trimmed sums divided by the normalization F_N.

    Run with the doubling system and floor(1/x) for the counterexample, with
    the Gauss system as the concentrating control.
    """
    system = build_system(config)
    table = None
    if config.normalization == "main-term":
        table = build_main_terms(system, config.profile, MixingProfile.asserted(config.g_constant), config.grid)
    thresholds = [tau(config.profile, n) for n in config.grid]
    norms = [normalizer(config, table, n) for n in config.grid]
    tasks = [(config, system, thresholds, norms, seed) for seed in sample_seeds(config)]
    outcomes = sorted(_map_samples(_dispersion_sample, tasks, config.threads), key=lambda outcome: outcome.seed)
    _log_samples(outcomes, "counterexample")
    good = [outcome for outcome in outcomes if not outcome.failure]
    rows = []
    for k, n in enumerate(config.grid):
        if not good:
            break
        sums = np.array([outcome.normalized[k] for outcome in good])
        median = float(np.median(sums))
        iqr = _iqr(sums)
        ratios = [outcome.neighbour_ratios[k] for outcome in good if outcome.neighbour_ratios[k] is not None]
        rows.append(
            DispersionRow(
                n=n,
                median=median,
                iqr=iqr,
                max_over_median=_safe_ratio(float(sums.max()), median),
                iqr_over_median=_safe_ratio(iqr, median),
                neighbour_ratio=float(np.median(ratios)) if ratios else math.nan,
            )
        )
    return DispersionReport(config, tuple(rows), tuple(outcomes))
