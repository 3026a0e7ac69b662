"""Errors raised by trim_ergodic.

Argument problems also subclass ``ValueError`` so callers that only know the
standard library can still catch them.
"""


class TrimErgodicError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(TrimErgodicError, ValueError):
    pass


class RefinementBudgetExceeded(TrimErgodicError):
    """A lazy real needed more bits than the orbit's budget allows."""

    def __init__(self, budget: int, symbols_done: int):
        super().__init__(
            f"refinement budget of {budget} bits exceeded after {symbols_done} symbols"
        )
        self.budget = budget
        self.symbols_done = symbols_done


class OrbitTerminated(TrimErgodicError):
    """An exact rational input reached 0 before the requested horizon."""


class InvalidInterval(TrimErgodicError, ValueError):
    pass


class InvalidSymbol(TrimErgodicError, ValueError):
    pass


class InvalidCell(TrimErgodicError, ValueError):
    pass


class InvalidSystem(TrimErgodicError, ValueError):
    pass


class NonConvergence(TrimErgodicError):
    pass


class NegativeValue(TrimErgodicError, ValueError):
    pass


class InsufficientOrbit(TrimErgodicError, ValueError):
    pass


class TruncationTailOverflow(TrimErgodicError):
    pass


class DegenerateFit(TrimErgodicError, ValueError):
    pass


class PersistenceError(TrimErgodicError):
    pass
