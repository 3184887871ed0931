"""Exception hierarchy shared by every pacal module."""

from __future__ import annotations


class PacalError(Exception):
    """Base class for all pacal errors."""


class UsageError(PacalError, ValueError):
    """Bad arguments: dimension mismatch, invalid parameters, bad config."""


class DomainError(PacalError):
    """A point left the chart's box domain.

    ``point`` is the offending point; ``step`` and ``parameter`` are filled in
    by path-following callers (transport, geodesic tracing).
    """

    def __init__(self, message, point=None, step=None, parameter=None):
        super().__init__(message)
        self.point = point
        self.step = step
        self.parameter = parameter


class NumericError(PacalError, ArithmeticError):
    """Singular or ill-conditioned frame matrix."""


class LimitError(PacalError):
    """A Richardson-extrapolated limit failed to converge."""

    def __init__(self, message, estimate=None, side=None):
        super().__init__(message)
        self.estimate = estimate
        self.side = side
