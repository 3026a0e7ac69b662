from pathlib import Path

import pytest

from trim_ergodic.cli import OPTIONS, build_parser, effective_options, main, read_config
from trim_ergodic.exceptions import ConfigError
from trim_ergodic.pipelines import load_json


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "trim_ergodic.cfg"
    path.write_text("[defaults]\nsystem = doubling\nsamples = 7\n\n[digits]\nn = 3\n")
    return path


def test_trim_command(capsys):
    assert main(["trim", "--values", "3,1,4,1,5", "--threshold", "4"]) == 0
    assert capsys.readouterr().out == "raw=14 trimmed=9 delta=1\n"


def test_trim_needs_values():
    assert main(["trim", "--threshold", "4"]) == 1


@pytest.mark.parametrize(
    ("argv", "expected"),
    [
        (["digits", "--x", "415/93", "--n", "3"], "2 6 7"),
        (["digits", "--system", "doubling", "--x", "1/3", "--n", "3"], "3 1 3"),
        (["digits", "--x=-1,1,5,2", "--n", "4", "--method", "binary"], "1 1 1 1"),
    ],
)
def test_digits_command(capsys, argv, expected):
    assert main(argv) == 0
    assert capsys.readouterr().out.strip() == expected


def test_digits_of_a_terminating_expansion_fail_at_runtime():
    assert main(["digits", "--x", "1/2", "--n", "10"]) == 2


def test_usage_errors(capsys):
    assert main([]) == 1
    assert main(["digits", "--x", "abc"]) == 1
    assert main(["digits", "--system", "tent"]) == 1
    assert main(["digits", "--help"]) == 0
    assert "--method" in capsys.readouterr().out


def test_config_file_supplies_defaults(capsys, config_file):
    assert main(["digits", "--config", str(config_file), "--x", "1/3"]) == 0
    assert capsys.readouterr().out.strip() == "3 1 3"
    assert main(["digits", "--config", str(config_file), "--x", "1/3", "--n", "2"]) == 0
    assert capsys.readouterr().out.strip() == "3 1"


def test_read_config(config_file):
    assert read_config(config_file, "digits") == {"system": "doubling", "n": 3}
    assert read_config(config_file, "experiment") == {"system": "doubling", "samples": 7}


def test_effective_options_precedence(config_file):
    options = effective_options("experiment", {"config": config_file, "samples": 2})
    assert options["system"] == "doubling"
    assert options["samples"] == 2
    assert options["format"] == "csv"
    assert effective_options("counterexample", {})["samples"] == 100


@pytest.mark.parametrize(
    "text",
    ["[digits]\nwidth = 3\n", "[digits]\nn = three\n", "[digits]\nsystem = tent\n", "n = 3\n"],
)
def test_bad_config_files(tmp_path, text):
    path = tmp_path / "bad.cfg"
    path.write_text(text)
    with pytest.raises(ConfigError):
        read_config(path, "digits")
    assert main(["digits", "--config", str(path)]) == 1


def test_missing_config_file(tmp_path):
    assert main(["digits", "--config", str(tmp_path / "missing.cfg")]) == 1


def test_grid_ranges():
    args = build_parser().parse_args(["mainterm", "--ngrid", "2..5,10"])
    assert args.ngrid == (2, 3, 4, 5, 10)


def test_mixing_command(capsys):
    argv = ["mixing", "--system", "doubling", "--observable", "indicator", "--gmode", "exact", "--n", "3"]
    assert main(argv) == 0
    assert capsys.readouterr().out.splitlines() == [
        "N,g,G,mode,extrapolated",
        "1,1.0,1.0,exact,0",
        "2,1.0,2.0,exact,0",
        "3,1.0,3.0,exact,0",
    ]


def test_mainterm_command(capsys):
    argv = ["mainterm", "--system", "doubling", "--observable", "indicator", "--gmode", "exact", "--ngrid", "10,100"]
    assert main(argv) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "N,F1,F2,G,F3,tau"
    assert lines[1].startswith("10,0.5,0.5,")


def test_experiment_command_writes_json(tmp_path):
    out = tmp_path / "trim.json"
    argv = [
        "experiment",
        "--system", "doubling",
        "--observable", "indicator",
        "--gmode", "exact",
        "--ngrid", "10,20",
        "--samples", "2",
        "--threads", "1",
        "--out", str(out),
        "--format", "json",
    ]  # fmt: skip
    assert main(argv) == 0
    header, rows = load_json(out)
    assert header["command"] == "experiment"
    assert header["ngrid"] == [10, 20]
    assert len(rows) == 4
    assert all(row.trimmed == row.raw for row in rows)


def test_sqlite_output_needs_a_file():
    argv = ["experiment", "--system", "doubling", "--observable", "indicator", "--ngrid", "10,20", "--samples", "1"]
    assert main([*argv, "--format", "sqlite", "--threads", "1"]) == 1


def test_counterexample_command(capsys):
    assert main(["counterexample", "--ngrid", "50,100", "--samples", "5", "--threads", "1"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "N,median,iqr,max_over_median,iqr_over_median,neighbour_ratio"
    assert [line.split(",")[0] for line in lines[1:]] == ["50", "100"]


def test_classical_command(capsys):
    assert main(["classical", "--ngrid", "10,20,40", "--samples", "3", "--threads", "1"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "seed,N,average,deviation"
    assert len(lines) == 10


def test_check_hypothesis_command(capsys):
    assert main(["check-hypothesis", "--ngrid", "2..2000"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert [line.split(":")[0] for line in lines] == ["growth", "slow-growth", "classical"]
    assert lines[0].startswith("growth: consistent")


@pytest.mark.parametrize("command", ["experiment", "counterexample", "classical", "mixing", "check-hypothesis"])
def test_shipped_config_keeps_the_worker_default(command):
    shipped = Path(__file__).parents[1] / "trim_ergodic.cfg"
    assert "threads" not in read_config(shipped, command)
    options = effective_options(command, {"config": shipped})
    assert options.get("threads", OPTIONS["threads"].default) == OPTIONS["threads"].default
    assert options["seed"] == 20130417
