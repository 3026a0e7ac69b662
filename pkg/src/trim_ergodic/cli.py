"""Command line front-end: ``trim-ergodic <subcommand> [flags]``.

Option values are merged from built-in defaults, the ``[defaults]`` section of
an INI file given with ``--config``, that file's section for the subcommand and
finally the command line. Exit status is 0 on success, 1 on usage or
configuration errors and 2 on errors while computing.
"""

import argparse
import configparser
import logging
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from trim_ergodic import settings
from trim_ergodic.dynamics import orbit, parse_real, sample_real
from trim_ergodic.exceptions import ConfigError, TrimErgodicError
from trim_ergodic.experiments import (
    NORMALIZATIONS,
    OBSERVABLES,
    SYSTEMS,
    ExperimentConfig,
    build_mixing,
    build_system,
    fit_exponent,
    run_classical_experiment,
    run_counterexample,
    run_trim_experiment,
    summarize_classical,
    summarize_trim,
)
from trim_ergodic.items import ClassicalRow, DispersionRow, MainTermRow, MixingRow, TrimRow
from trim_ergodic.mainterm import (
    TailProfile,
    build_main_terms,
    check_classical_hypothesis,
    check_growth_hypothesis,
    check_slow_growth_hypotheses,
)
from trim_ergodic.mixing import MODES
from trim_ergodic.pipelines import FORMATS, persist, render_csv, render_json
from trim_ergodic.systems.gauss import METHODS
from trim_ergodic.trimming import trim

logger = logging.getLogger(__name__)


def _integer(text: str) -> int:
    value = Fraction(text)
    if value.denominator != 1:
        raise ValueError(f"{text!r} is not an integer")
    return int(value)


def _grid(text: str) -> tuple[int, ...]:
    """Comma separated N values; "a..b" stands for every N from a to b."""
    grid = []
    for part in text.split(","):
        if ".." in part:
            low, high = part.split("..", 1)
            grid.extend(range(_integer(low), _integer(high) + 1))
        elif part.strip():
            grid.append(_integer(part))
    return tuple(grid)


def _fractions(text: str) -> tuple[Fraction, ...]:
    return tuple(Fraction(part.strip()) for part in text.split(",") if part.strip())


@dataclass(frozen=True)
class Option:
    convert: object
    default: object
    help: str
    choices: tuple | None = None


OPTIONS = {
    "system": Option(str, "gauss", "symbolic system", SYSTEMS),
    "observable": Option(str, None, "observable on the system's partition", OBSERVABLES),
    "seed": Option(_integer, settings.DEFAULT_BASE_SEED, "seed of the random starting point"),
    "x": Option(parse_real, None, 'exact starting point "p/q" or quadratic hook "p,r,d,q" instead of --seed'),
    "n": Option(_integer, 10, "orbit length N"),
    "ngrid": Option(_grid, settings.DEFAULT_GRID, "comma separated grid of N, a..b for a range"),
    "samples": Option(_integer, settings.DEFAULT_SAMPLES, "number of seeds"),
    "epsilon": Option(float, 0.5, "epsilon of the cutoff N (ln N)^(1/2+epsilon)"),
    "phi-p": Option(float, 1.0, "p in phi(lambda) = lambda^p ln(e+lambda)^q"),
    "phi-q": Option(float, 0.0, "q in phi(lambda) = lambda^p ln(e+lambda)^q"),
    "gcap": Option(_integer, 10, "largest cell index entering g(N)"),
    "gmode": Option(str, None, "how g(N) is obtained", MODES),
    "g-constant": Option(float, settings.ASSERTED_G_CONSTANT, "g(N) for the asserted mode"),
    "out": Option(Path, None, "output file (standard output when omitted)"),
    "format": Option(str, "csv", "output format", FORMATS),
    "threads": Option(_integer, settings.THREADS, "worker processes"),
    "method": Option(str, None, "continued fraction digit construction", METHODS),
    "level": Option(_integer, 1, "dyadic partition level"),
    "values": Option(_fractions, None, "comma separated observable values (orbit values for trim)"),
    "constant": Option(Fraction, Fraction(1), "value of the constant observable"),
    "transition": Option(str, None, 'Markov transition matrix "a,b;c,d"'),
    "markov-values": Option(_fractions, None, "comma separated Markov state values"),
    "threshold": Option(Fraction, None, "trim threshold"),
    "normalization": Option(str, "n-log-n", "normalization F_N of the counterexample sums", NORMALIZATIONS),
}

_SYSTEM = ["system", "observable", "level", "values", "constant", "transition", "markov-values"]
_PROFILE = ["epsilon", "phi-p", "phi-q"]
_MIXING = ["gcap", "gmode", "g-constant"]
_OUTPUT = ["out", "format"]
_RUN = ["ngrid", "samples", "seed", "method", "threads"]

COMMANDS = {
    "digits": ("print the first N symbols of an orbit", [*_SYSTEM, "seed", "x", "n", "method"]),
    "trim": ("trim a list of values at a threshold", ["values", "threshold"]),
    "mainterm": ("tabulate tau, F1, F2, G and F3 over a grid", [*_SYSTEM, *_PROFILE, *_MIXING, "ngrid", "seed", *_OUTPUT]),
    "mixing": ("tabulate g(N) and G(N)", [*_SYSTEM, *_MIXING, "n", "seed", "method", *_OUTPUT]),
    "experiment": ("run the seeded trimmed-sum experiment", [*_SYSTEM, *_PROFILE, *_MIXING, *_RUN, *_OUTPUT]),
    "counterexample": (
        "dispersion of normalized trimmed sums",
        [*_SYSTEM, *_PROFILE, "normalization", "g-constant", *_RUN, *_OUTPUT],
    ),
    "check-hypothesis": ("check the growth conditions on F1, F3 and g", [*_SYSTEM, *_PROFILE, *_MIXING, "ngrid", "seed"]),
    "classical": ("Birkhoff averages of a bounded observable", [*_SYSTEM, *_RUN, *_OUTPUT]),
}

COMMAND_DEFAULTS = {
    "counterexample": {"system": "doubling", "samples": 100},
    "classical": {"system": "doubling", "observable": "indicator"},
    "check-hypothesis": {"ngrid": tuple(range(2, 1001))},
}


class ArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="trim-ergodic", description="Trimmed Birkhoff sums over symbolic systems")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command, (description, names) in COMMANDS.items():
        subparser = subparsers.add_parser(command, help=description, description=description)
        subparser.add_argument("--config", type=Path, default=argparse.SUPPRESS, help="INI file with option defaults")
        for name in names:
            option = OPTIONS[name]
            value = COMMAND_DEFAULTS.get(command, {}).get(name, option.default)
            default = "" if value is None else f" (default: {_show(value)})"
            subparser.add_argument(
                f"--{name}",
                dest=name,
                type=option.convert,
                choices=option.choices,
                default=argparse.SUPPRESS,
                help=option.help + default,
            )
    return parser


def _show(value) -> str:
    if isinstance(value, tuple):
        if len(value) > 3 and all(isinstance(v, int) for v in value) and value == tuple(range(value[0], value[-1] + 1)):
            return f"{value[0]}..{value[-1]}"
        return ",".join(str(v) for v in value)
    return str(value)


def read_config(path: Path, command: str) -> dict:
    """Options from the ``[defaults]`` and ``[command]`` sections of an INI file."""
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path}: {exc}") from exc
    names = COMMANDS[command][1]
    options = {}
    if parser.has_section("defaults"):
        options.update((key, value) for key, value in parser.items("defaults") if key in names)
    if parser.has_section(command):
        for key, value in parser.items(command):
            if key not in names:
                raise ConfigError(f"{path}: unknown option {key!r} in [{command}]")
            options[key] = value
    converted = {}
    for key, text in options.items():
        option = OPTIONS[key]
        try:
            converted[key] = option.convert(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"{path}: bad value {text!r} for {key}: {exc}") from exc
        if option.choices and converted[key] not in option.choices:
            raise ConfigError(f"{path}: {key} must be one of {option.choices}, got {text!r}")
    return converted


def effective_options(command: str, flags: dict) -> dict:
    options = {name: OPTIONS[name].default for name in COMMANDS[command][1]}
    options.update(COMMAND_DEFAULTS.get(command, {}))
    if "config" in flags:
        options.update(read_config(flags["config"], command))
    options.update((key, value) for key, value in flags.items() if key != "config")
    return options


def _header(command: str, options: dict) -> dict:
    header = {"command": command}
    for key, value in options.items():
        if key in ("out", "format", "threads", "x"):
            continue
        if isinstance(value, tuple):
            value = [str(v) if isinstance(v, Fraction) else v for v in value]
        elif isinstance(value, Fraction):
            value = str(value)
        header[key] = value
    return header


def experiment_config(options: dict) -> ExperimentConfig:
    system = options.get("system", "gauss")
    values = options.get("markov-values") if system == "markov" else options.get("values")
    return ExperimentConfig(
        system=system,
        observable=options.get("observable"),
        profile=TailProfile(options.get("phi-p", 1.0), options.get("phi-q", 0.0), options.get("epsilon", 0.5)),
        grid=options.get("ngrid", settings.DEFAULT_GRID),
        samples=options.get("samples", 1),
        base_seed=options.get("seed", settings.DEFAULT_BASE_SEED),
        gmode=options.get("gmode"),
        gcap=options.get("gcap", 10),
        g_constant=options.get("g-constant", settings.ASSERTED_G_CONSTANT),
        method=options.get("method"),
        level=options.get("level", 1),
        values=values,
        constant=options.get("constant", Fraction(1)),
        transition=options.get("transition"),
        normalization=options.get("normalization", "n-log-n"),
        threads=options.get("threads", 1),
    )


def emit(rows, row_type, options: dict, header: dict) -> None:
    out, format = options.get("out"), options.get("format", "csv")
    if out is not None:
        persist(rows, out, format, row_type, header)
        logger.info("wrote %d rows to %s", len(rows), out)
        return
    match format:
        case "csv":
            sys.stdout.write(render_csv(rows, row_type))
        case "json":
            sys.stdout.write(render_json(rows, row_type, header))
        case _:
            raise ConfigError(f"{format} output needs --out")


def run_digits(options: dict) -> None:
    config = experiment_config(options)
    system = build_system(config)
    x = options["x"] if options.get("x") is not None else sample_real(options["seed"])
    digits = orbit(system, x, options["n"], method=options.get("method"))
    print(" ".join(str(symbol) for symbol in digits.symbols))


def run_trim(options: dict) -> None:
    if options.get("values") is None or options.get("threshold") is None:
        raise ConfigError("trim needs --values and --threshold")
    result = trim(list(options["values"]), options["threshold"])
    print(f"raw={result.raw_sum} trimmed={result.trimmed_sum} delta={result.delta}")


def run_mainterm(options: dict, header: dict) -> None:
    config = experiment_config(options)
    system = build_system(config)
    table = build_main_terms(system, config.profile, build_mixing(config, system), config.grid)
    emit([MainTermRow(*row) for row in table.rows()], MainTermRow, options, header)


def run_mixing(options: dict, header: dict) -> None:
    config = experiment_config({**options, "ngrid": (max(options["n"], 2),)})
    system = build_system(config)
    profile = build_mixing(config, system)
    grid = range(1, options["n"] + 1)
    emit([MixingRow(*row) for row in profile.rows(grid)], MixingRow, options, header)


def run_experiment(options: dict, header: dict) -> None:
    config = experiment_config(options)
    result = run_trim_experiment(config)
    for summary in summarize_trim(result):
        logger.info(
            "N=%d median trimmed/(N F1)=%.4f IQR=%.4f median |error|=%.4g median |raw error|=%.4g "
            "multiple exceedances=%.3f",
            summary.n,
            summary.median_ratio,
            summary.iqr_ratio,
            summary.median_abs_error,
            summary.median_abs_raw_error,
            summary.multiple_exceedance_fraction,
        )
    if result.failures:
        logger.warning("%d of %d samples failed", len(result.failures), config.samples)
    emit(result.rows(), TrimRow, options, header)


def run_counterexample_command(options: dict, header: dict) -> None:
    config = experiment_config(options)
    report = run_counterexample(config)
    emit(list(report.rows), DispersionRow, options, header)


def run_check_hypothesis(options: dict) -> None:
    config = experiment_config(options)
    system = build_system(config)
    mixing = build_mixing(config, system)
    table = build_main_terms(system, config.profile, mixing, config.grid)
    reports = [
        check_growth_hypothesis(table),
        check_slow_growth_hypotheses(table, mixing),
        check_classical_hypothesis(mixing, config.grid),
    ]
    for report in reports:
        slopes = " ".join(f"{key}_slope={value:.4f}" for key, value in report.slopes.items())
        print(f"{report.name}: {report.verdict} {slopes}".rstrip())


def run_classical(options: dict, header: dict) -> None:
    config = experiment_config(options)
    result = run_classical_experiment(config)
    summary = summarize_classical(result)
    for n, deviation in summary:
        logger.info("N=%d median |average - integral|=%.4g", n, deviation)
    if len(summary) >= 3 and all(deviation > 0 for _, deviation in summary):
        fit = fit_exponent(summary)
        logger.info("deviation exponent %.3f +- %.3f", fit.slope, fit.standard_error)
    emit(result.rows(), ClassicalRow, options, header)


def dispatch(command: str, options: dict) -> None:
    header = _header(command, options)
    logger.debug("effective configuration: %s", header)
    match command:
        case "digits":
            run_digits(options)
        case "trim":
            run_trim(options)
        case "mainterm":
            run_mainterm(options, header)
        case "mixing":
            run_mixing(options, header)
        case "experiment":
            run_experiment(options, header)
        case "counterexample":
            run_counterexample_command(options, header)
        case "check-hypothesis":
            run_check_hypothesis(options)
        case "classical":
            run_classical(options, header)


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=settings.LOG_LEVEL, format=settings.LOG_FORMAT, stream=sys.stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    flags = {key: value for key, value in vars(args).items() if key != "command"}
    try:
        options = effective_options(args.command, flags)
        dispatch(args.command, options)
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        print(f"trim-ergodic {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except TrimErgodicError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return 2
    except ValueError as exc:
        print(f"trim-ergodic {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
