"""Exception hierarchy shared by every module."""


class OULabError(Exception):
    """Base class for all package errors."""


class InvalidInputError(OULabError, ValueError):
    """An argument violates a documented precondition."""


class ConvergenceError(OULabError):
    """A numerical tolerance could not be met.

    ``estimate`` carries the achieved error estimate.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class DomainTruncationError(OULabError):
    """A grid state carries too much mass near the box boundary.

    Periodizing the box is only a faithful stand-in for R^N when states
    have decayed; this error reports the offending shell mass fraction.
    """

    def __init__(self, message, fraction=None):
        super().__init__(message)
        self.fraction = fraction


class DegenerateCaseError(OULabError):
    """A ratio or estimate would divide by a (numerically) zero quantity."""


class OutOfRegimeError(OULabError):
    """A stability bound was requested outside the range where it is meaningful."""


class SolverFailureError(OULabError):
    """An iterative solver diverged; ``diagnostics`` holds the energy history."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
