"""Exceptions raised by the oscint engine.

Everything a computation can fail with derives from :class:`OscIntError`, so
the CLI can map it to exit code 1. Bad-argument failures also derive from
``ValueError``.
"""

from __future__ import annotations


class OscIntError(Exception):
    """Base class for computation errors."""


class ZeroPolynomial(OscIntError, ValueError):
    """The operation is undefined for the zero polynomial."""


class ToleranceNotMet(OscIntError):
    """Adaptive refinement stalled above the requested tolerance."""

    def __init__(self, message: str, achieved: float | None = None) -> None:
        super().__init__(message)
        self.achieved = achieved


class NotConverged(OscIntError):
    """Lobe summation did not reach monotone decay within the lobe budget."""


class InvalidTolerance(OscIntError, ValueError):
    """Tolerance must be strictly positive."""


class InvalidRange(OscIntError, ValueError):
    """Empty or reversed integration range."""


class EmptySet(OscIntError, ValueError):
    """A set of total length zero where positive length is required."""


class DuplicatePoints(OscIntError, ValueError):
    """Interpolation nodes must be pairwise distinct."""


class PreconditionFailed(OscIntError):
    """A checked precondition does not hold; ``point`` is a witness."""

    def __init__(self, message: str, point: float | None = None) -> None:
        super().__init__(message)
        self.point = point


class DegreeTooSmall(OscIntError, ValueError):
    """The polynomial degree is below what the operation needs."""


class DegenerateDerivative(OscIntError, ValueError):
    """The derivative is constant, so sublevel sets of it are degenerate."""


class DescriptorError(OscIntError, ValueError):
    """Malformed polynomial JSON descriptor."""


class SweepNotFound(OscIntError, FileNotFoundError):
    """A sweep CSV or JSON sidecar does not exist."""


class SweepParseError(OscIntError, ValueError):
    """A sweep CSV row could not be parsed; ``line`` is 1-based."""

    def __init__(self, message: str, line: int) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


def check_tol(tol: float) -> float:
    """Validate a tolerance argument."""
    if not tol > 0:
        raise InvalidTolerance(f"tolerance must be positive, got {tol!r}")
    return float(tol)
