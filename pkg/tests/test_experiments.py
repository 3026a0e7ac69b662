import math
from fractions import Fraction

import pytest

from trim_ergodic import settings
from trim_ergodic.exceptions import ConfigError, DegenerateFit
from trim_ergodic.experiments import (
    ExperimentConfig,
    build_system,
    derive_seed,
    fit_exponent,
    run_classical_experiment,
    run_counterexample,
    run_trim_experiment,
    sample_seeds,
    summarize_classical,
    summarize_trim,
)
from trim_ergodic.items import TrimRow
from trim_ergodic.mixing import MixingProfile
from trim_ergodic.pipelines import render_csv


@pytest.fixture
def indicator_config():
    return ExperimentConfig(system="doubling", observable="indicator", grid=(10, 20, 40), samples=3, base_seed=11)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"system": "tent"},
        {"observable": "square"},
        {"grid": (1, 10)},
        {"grid": (10, 10)},
        {"samples": 0},
        {"normalization": "none"},
        {"threads": 0},
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        ExperimentConfig(**kwargs)


def test_config_header():
    config = ExperimentConfig(system="doubling", grid=[10, 100], constant=Fraction(1, 2), threads=4)
    header = config.header()
    assert header["observable"] == "reciprocal"
    assert header["grid"] == [10, 100]
    assert header["constant"] == "1/2"
    assert "threads" not in header


def test_build_system():
    assert build_system(ExperimentConfig()).name == "gauss"
    assert build_system(ExperimentConfig(system="doubling")).observable == "reciprocal"
    markov = build_system(ExperimentConfig(system="markov", transition="1/2,1/2;1/3,2/3"))
    assert markov.partition.measures == (Fraction(2, 5), Fraction(3, 5))


@pytest.mark.parametrize(
    ("kwargs", "reason"),
    [
        ({"system": "gauss", "observable": "indicator"}, "not available"),
        ({"system": "doubling", "observable": "cylinder"}, "--values"),
        ({"system": "markov"}, "--transition"),
    ],
)
def test_build_system_rejects_incomplete_configs(kwargs, reason):
    with pytest.raises(ConfigError, match=reason):
        build_system(ExperimentConfig(**kwargs))


def test_seeds_are_stable_and_extendable():
    small = sample_seeds(ExperimentConfig(samples=3, base_seed=5))
    large = sample_seeds(ExperimentConfig(samples=6, base_seed=5))
    assert large[:3] == small
    assert len(set(large)) == 6
    assert derive_seed(5, 0) == small[0]
    assert derive_seed(6, 0) != small[0]


def test_bounded_observable_is_never_trimmed(indicator_config):
    result = run_trim_experiment(indicator_config)
    rows = result.rows()
    assert len(rows) == 9
    assert not result.failures
    for row in rows:
        assert row.delta == 0
        assert row.trimmed == row.raw
        assert row.main_term == Fraction(row.n, 2)
        assert row.error == row.raw - Fraction(row.n, 2)


def test_trim_rows_keep_the_bookkeeping_identity():
    config = ExperimentConfig(grid=(10, 100, 500), samples=4, base_seed=3)
    result = run_trim_experiment(config, MixingProfile.asserted(1))
    seeds = [record.seed for record in result.records]
    assert seeds == sorted(seeds)
    for row in result.rows():
        assert row.raw == row.trimmed + row.delta * row.max_term
        assert row.raw == row.main_term + row.delta * row.max_term + row.error
        assert row.exceedances >= row.delta


def test_samples_do_not_depend_on_the_worker_count(indicator_config):
    serial = run_trim_experiment(indicator_config)
    parallel = run_trim_experiment(
        ExperimentConfig(system="doubling", observable="indicator", grid=(10, 20, 40), samples=3, base_seed=11, threads=2)
    )
    assert parallel.rows() == serial.rows()


def test_gauss_csv_is_identical_for_one_and_eight_workers():
    def render(threads):
        config = ExperimentConfig(grid=(10, 100, 300), samples=8, base_seed=5, threads=threads)
        return render_csv(run_trim_experiment(config, MixingProfile.asserted(1)).rows(), TrimRow)

    single = render(1)
    assert single.count("\n") == 1 + 3 * 8
    assert render(8) == single


def test_failed_samples_are_recorded(monkeypatch):
    monkeypatch.setattr(settings, "BITS_PER_SYMBOL_BUDGET", 0)
    monkeypatch.setattr(settings, "BUDGET_SLACK_BITS", 40)
    result = run_trim_experiment(ExperimentConfig(grid=(10, 20), samples=2), MixingProfile.asserted(1))
    assert len(result.failures) == 2
    assert result.rows() == []
    assert all("RefinementBudgetExceeded" in record.failure for record in result.failures)


def test_summarize_trim(indicator_config):
    summaries = summarize_trim(run_trim_experiment(indicator_config))
    assert [summary.n for summary in summaries] == [10, 20, 40]
    for summary in summaries:
        assert summary.multiple_exceedance_fraction == 0
        assert summary.median_abs_error == summary.median_abs_raw_error


def test_fit_exponent():
    fit = fit_exponent([(n, 3 * n**0.5) for n in (10, 100, 1000, 10000)])
    assert fit.slope == pytest.approx(0.5)
    assert fit.intercept == pytest.approx(math.log(3))
    low, high = fit.band()
    assert low <= fit.slope <= high


def test_fit_exponent_rejects_bad_input():
    with pytest.raises(ValueError, match="three points"):
        fit_exponent([(10, 1), (100, 2)])
    with pytest.raises(ValueError, match="positive"):
        fit_exponent([(10, 1), (100, 0), (1000, 2)])
    with pytest.raises(DegenerateFit):
        fit_exponent([(10, 1), (10, 2), (10, 3)])


def test_classical_averages(indicator_config):
    result = run_classical_experiment(indicator_config)
    assert result.integral == Fraction(1, 2)
    assert len(result.rows()) == 9
    for row in result.rows():
        assert row.deviation == row.average - Fraction(1, 2)
        assert 0 <= row.average <= 1
    assert [n for n, _ in summarize_classical(result)] == [10, 20, 40]


def test_classical_rejects_unbounded_observables():
    with pytest.raises(ConfigError, match="square integrable"):
        run_classical_experiment(ExperimentConfig(system="doubling", samples=1))


def test_constant_observable_has_no_deviation():
    config = ExperimentConfig(system="doubling", observable="constant", constant=Fraction(3, 2), grid=(5, 10), samples=2)
    result = run_classical_experiment(config)
    assert all(row.deviation == 0 for row in result.rows())


def test_counterexample_report():
    config = ExperimentConfig(system="doubling", grid=(100, 1000), samples=20, base_seed=1)
    report = run_counterexample(config)
    assert [row.n for row in report.rows] == [100, 1000]
    assert len(report.outcomes) == 20
    for row in report.rows:
        assert row.median > 0
        assert row.iqr >= 0
        assert row.max_over_median >= 1
    assert set(report.iqr_over_median()) == {100, 1000}


def test_counterexample_main_term_normalization():
    config = ExperimentConfig(grid=(100, 200), samples=5, normalization="main-term")
    report = run_counterexample(config)
    assert all(0.2 < row.median < 5 for row in report.rows)
