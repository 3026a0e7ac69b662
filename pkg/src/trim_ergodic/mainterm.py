"""Cutoffs, truncated moments and the main-term bookkeeping F1, F2, G, F3.

For a tail profile phi and N >= 2 the cutoff is

    tau(N) = phi^{-1}(N * (ln N)^(1/2 + epsilon))

and F1(N), F2(N) are the first two moments of the observable restricted to
{f <= tau(N)}. G(N) sums the correlation bound g(1..N), and

    F3(N) = F1(N)^2 * (N + G(N)) + F2(N).
"""

import functools
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from trim_ergodic import settings
from trim_ergodic.exceptions import NonConvergence, TruncationTailOverflow
from trim_ergodic.systems.base import Moment, SystemModel
from trim_ergodic.systems.gauss import LN2, gauss_first_moment

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TailProfile:
    """phi(lambda) = lambda^p * ln(e + lambda)^q together with epsilon."""

    p: float = 1.0
    q: float = 0.0
    epsilon: float = 0.5
    k_phi: float | None = None

    def __post_init__(self):
        if not self.p > 0:
            raise ValueError(f"phi needs p > 0, got {self.p}")
        if self.q < -self.p:
            raise ValueError(f"phi is not increasing for q={self.q} < -p")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")

    def phi(self, lam: float) -> float:
        if lam <= 0:
            return 0.0
        return lam**self.p * math.log(math.e + lam) ** self.q

    def target(self, n: int) -> float:
        """N * (ln N)^(1/2 + epsilon)."""
        return cutoff(n, self.epsilon)


def cutoff(n: int, epsilon: float) -> float:
    """The threshold N (ln N)^(1/2+epsilon) of the plain weak-L1 case."""
    if n < 2:
        raise ValueError(f"cutoffs need N >= 2, got {n}")
    return n * math.log(n) ** (0.5 + epsilon)


@functools.lru_cache(maxsize=65536)
def _invert(p: float, q: float, epsilon: float, n: int) -> float:
    profile = TailProfile(p, q, epsilon)
    target = profile.target(n)
    lo, hi = 0.0, 1.0
    for _ in range(settings.TAU_MAX_ITER):
        if profile.phi(hi) >= target:
            break
        lo, hi = hi, 2 * hi
    else:
        raise NonConvergence(f"could not bracket phi^-1({target}) for {profile}")
    for _ in range(settings.TAU_MAX_ITER):
        if hi - lo <= settings.TAU_RTOL * hi:
            return (lo + hi) / 2
        mid = (lo + hi) / 2
        if profile.phi(mid) < target:
            lo = mid
        else:
            hi = mid
    raise NonConvergence(f"bisection for phi^-1({target}) did not converge for {profile}")


def tau(profile: TailProfile, n: int) -> float:
    """phi^{-1}(N (ln N)^(1/2+epsilon)) by bisection."""
    if n < 2:
        raise ValueError(f"tau needs N >= 2, got {n}")
    return _invert(profile.p, profile.q, profile.epsilon, int(n))


def truncated_moment(system: SystemModel, threshold: float, power: int) -> Moment:
    """Sum of alpha_i^k mu(A_i) over the cells with alpha_i <= threshold."""
    if threshold < 0:
        raise ValueError(f"threshold must be non-negative, got {threshold}")
    return system.partition.truncated_moment(threshold, power)


def first_moment(system: SystemModel, n: int, epsilon: float):
    """F(N): the first moment truncated at N (ln N)^(1/2+epsilon)."""
    return truncated_moment(system, cutoff(n, epsilon), 1).value


def gauss_main_term(n: int, epsilon: float) -> float:
    """N * F(N) for the continued fraction digits."""
    return n * gauss_first_moment(math.floor(cutoff(n, epsilon)))


def gauss_main_term_asymptotic(n: int, epsilon: float) -> float:
    """(N ln N + (1/2+epsilon) N ln ln N) / ln 2; differs from gauss_main_term by O(N)."""
    return (n * math.log(n) + (0.5 + epsilon) * n * math.log(math.log(n))) / LN2


def weak_norm(system: SystemModel, profile: TailProfile, cap: int | None = None) -> float:
    """K_phi(f) = sup over lambda of phi(lambda) * mu{f > lambda}, over the tabulated cells.

    The supremum is approached from below each cell value, where mu{f > lambda}
    equals mu{f >= value}.
    """
    partition = system.partition
    values = sorted({partition.value(i) for i in partition.cells(cap)})
    best = 0.0
    previous = -math.inf
    for value in values:
        if value > 0:
            best = max(best, profile.phi(value) * float(partition.tail_measure(previous)))
        previous = value
    return best


def _cumulative(g_model, grid: Sequence[int]) -> list[float]:
    if hasattr(g_model, "cumulative"):
        return [float(g_model.cumulative(n)) for n in grid]
    totals, running, done = [], 0.0, 0
    for n in grid:
        running += math.fsum(g_model(k) for k in range(done + 1, n + 1))
        done = n
        totals.append(running)
    return totals


@dataclass(frozen=True)
class MainTermTable:
    grid: tuple[int, ...]
    tau: tuple[float, ...]
    f1: tuple[float, ...]
    f2: tuple[float, ...]
    g_cum: tuple[float, ...]
    f3: tuple[float, ...]
    profile: TailProfile = field(default_factory=TailProfile)

    @classmethod
    def from_columns(cls, grid, f1, f2, g_cum, tau=None, profile=None) -> "MainTermTable":
        """Assemble F3 = F1^2 (N + G) + F2 from the given columns."""
        f1, f2, g_cum = (tuple(float(v) for v in column) for column in (f1, f2, g_cum))
        f3 = tuple(a * a * (n + g) + b for n, a, b, g in zip(grid, f1, f2, g_cum, strict=True))
        return cls(
            grid=tuple(int(n) for n in grid),
            tau=tuple(tau) if tau is not None else (math.nan,) * len(f1),
            f1=f1,
            f2=f2,
            g_cum=g_cum,
            f3=f3,
            profile=profile or TailProfile(),
        )

    def index(self, n: int) -> int:
        return self.grid.index(n)

    def main_term(self, n: int) -> float:
        """N * F1(N)."""
        return n * self.f1[self.index(n)]

    def rows(self):
        """(N, F1, F2, G, F3, tau) per grid point."""
        return zip(self.grid, self.f1, self.f2, self.g_cum, self.f3, self.tau, strict=True)


def build_main_terms(system: SystemModel, profile: TailProfile, g_model, grid: Sequence[int]) -> MainTermTable:
    grid = [int(n) for n in grid]
    if any(b <= a for a, b in zip(grid, grid[1:], strict=False)):
        raise ValueError("grid must be strictly increasing")
    taus, f1, f2 = [], [], []
    for n in grid:
        threshold = tau(profile, n)
        moments = [truncated_moment(system, threshold, k) for k in (1, 2)]
        for k, moment in enumerate(moments, start=1):
            if moment.tail > settings.TAIL_TOLERANCE * float(moment.value):
                raise TruncationTailOverflow(
                    f"F{k}({n}) has tail bound {float(moment.tail):.3g} against value {float(moment.value):.3g}"
                )
        taus.append(threshold)
        f1.append(moments[0].value)
        f2.append(moments[1].value)
    table = MainTermTable.from_columns(grid, f1, f2, _cumulative(g_model, grid), taus, profile)
    logger.debug("built main terms for %s over %d grid points", system.name, len(grid))
    return table


def error_scale(table: MainTermTable) -> tuple[float, ...]:
    """F3^(2/3) * (ln F3)^(1/3 + epsilon) per grid point."""
    exponent = 1 / 3 + table.profile.epsilon
    return tuple(f3 ** (2 / 3) * max(math.log(f3), 0.0) ** exponent for f3 in table.f3)


def log_corrected_scale(table: MainTermTable) -> tuple[float, ...]:
    """(N + G(N))^(2/3) * (ln N)^(5/3 + epsilon) per grid point."""
    exponent = 5 / 3 + table.profile.epsilon
    return tuple((n + g) ** (2 / 3) * math.log(n) ** exponent for n, g in zip(table.grid, table.g_cum, strict=True))


@dataclass(frozen=True)
class HypothesisReport:
    """Ratio sequences over consecutive N, their maxima, log-log slopes and a verdict."""

    name: str
    ns: tuple[int, ...]
    series: dict[str, tuple[float, ...]]
    maxima: dict[str, float]
    slopes: dict[str, float]
    verdict: str
    flat: tuple[int, ...] = ()

    @property
    def consistent(self) -> bool:
        return self.verdict == "consistent"


def _loglog_slope(ns, values) -> float:
    pairs = [(n, v) for n, v in zip(ns, values, strict=True) if v > 0]
    if len(pairs) < 3:
        return 0.0
    x = np.log([n for n, _ in pairs])
    y = np.log([v for _, v in pairs])
    if np.ptp(x) == 0:
        return 0.0
    return float(stats.linregress(x, y).slope)


def _report(name, ns, series, flat=(), decreasing=()) -> HypothesisReport:
    slopes = {key: _loglog_slope(ns, values) for key, values in series.items()}
    maxima = {key: max(values, default=0.0) for key, values in series.items()}
    bounded = all(
        slope < 0 if key in decreasing else slope <= settings.SLOPE_TOLERANCE for key, slope in slopes.items()
    )
    verdict = "consistent" if bounded else "inconsistent"
    logger.info("%s: slopes %s -> %s", name, {k: round(v, 4) for k, v in slopes.items()}, verdict)
    return HypothesisReport(name, tuple(ns), series, maxima, slopes, verdict, tuple(flat))


def _consecutive(table: MainTermTable):
    pairs = [k for k in range(len(table.grid) - 1) if table.grid[k + 1] == table.grid[k] + 1]
    if len(pairs) < 3:
        raise ValueError("the growth check needs at least three consecutive grid points")
    return pairs


def check_growth_hypothesis(table: MainTermTable) -> HypothesisReport:
    """Ratios r1 = ((N+1)F1(N+1) - N F1(N)) / (F3(N+1) - F3(N)) and r2 = (F3(N+1) - F3(N)) / F3(N)^(2/3).

    Both must stay bounded; a positive log-log trend beyond the slope tolerance
    makes the verdict "inconsistent". Points where F3 does not move are listed
    in ``flat`` and left out.
    """
    ns, r1, r2, flat = [], [], [], []
    for k in _consecutive(table):
        n = table.grid[k]
        step = table.f3[k + 1] - table.f3[k]
        if step == 0:
            flat.append(n)
            continue
        ns.append(n)
        r1.append(((n + 1) * table.f1[k + 1] - n * table.f1[k]) / step)
        r2.append(step / table.f3[k] ** (2 / 3))
    if flat:
        logger.warning("F3 is locally constant at %d grid points", len(flat))
    if not ns:
        return HypothesisReport("growth", (), {}, {}, {}, "degenerate", tuple(flat))
    return _report("growth", ns, {"r1": tuple(r1), "r2": tuple(r2)}, flat)


def check_slow_growth_hypotheses(table: MainTermTable, mixing) -> HypothesisReport:
    """N (F(N+1) - F(N)) stays bounded and g(N) / N^(1/2) decays."""
    ns, increments, g_ratio = [], [], []
    for k in _consecutive(table):
        n = table.grid[k]
        ns.append(n)
        increments.append(n * (table.f1[k + 1] - table.f1[k]))
        g_ratio.append(float(mixing.g(n)) / math.sqrt(n))
    return _report(
        "slow-growth", ns, {"increment": tuple(increments), "g_over_sqrt": tuple(g_ratio)}, decreasing=("g_over_sqrt",)
    )


def check_classical_hypothesis(mixing, grid: Sequence[int]) -> HypothesisReport:
    """g(N+1) / (N + G(N))^(2/3) stays bounded."""
    ns = [int(n) for n in grid]
    ratios = tuple(float(mixing.g(n + 1)) / (n + float(mixing.cumulative(n))) ** (2 / 3) for n in ns)
    return _report("classical", ns, {"ratio": ratios})
