"""Exception types raised across the package."""


class ZDError(Exception):
    """Base class for all package errors."""


class InvalidSpec(ZDError, ValueError):
    """A game specification violates one of its parameter bounds."""


class SlopeAtOne(ZDError, ValueError):
    """The baseline-payoff bounds divide by ``1 - s`` and are undefined at s = 1."""


class SlopeOutOfRange(ZDError, ValueError):
    """The slope lies outside the open interval (-1/(n-1), 1)."""


class InfeasibleParameters(ZDError, ValueError):
    """Some entries of a constructed strategy fall outside [0, 1].

    ``violations`` holds ``(index, value)`` pairs for every offending entry.
    """

    def __init__(self, violations, message=None):
        self.violations = list(violations)
        if message is None:
            shown = ", ".join(f"p[{k}]={v:.6g}" for k, v in self.violations)
            message = f"strategy entries outside [0, 1]: {shown}"
        super().__init__(message)


class NotEnforceable(ZDError, ValueError):
    """The requested (s, l) pair fails the enforceability conditions."""


class NotFound(ZDError, LookupError):
    """A numeric search terminated without finding a solution."""


class NoFeasibleSlope(ZDError, LookupError):
    """No slope in the legal range admits the requested baseline payoff."""


class StateSpaceTooLarge(ZDError, ValueError):
    """The exact Markov solver refuses games with more than 16 players."""


class NumericFailure(ZDError, ArithmeticError):
    """A linear solve or iterative method did not produce a usable answer."""
