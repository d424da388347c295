"""Exception hierarchy shared across the package."""

from __future__ import annotations


class RIIError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(RIIError, ValueError):
    """An argument is outside its documented domain."""


class DimensionMismatchError(InvalidArgumentError):
    """Vector or matrix shapes do not agree."""


class RankDeficientError(InvalidArgumentError):
    """A design matrix does not have full column rank."""


class NoValidThresholdError(RIIError):
    """No hit-count threshold reaches the requested confidence level."""


class NumericalInstabilityError(RIIError, ArithmeticError):
    """The simplex kernel could not find a trustworthy pivot."""


class EmptyRegionError(RIIError):
    """The confidence region was proven empty."""

    def __init__(self, message: str, *, alpha: float | None = None, nodes: int = 0):
        super().__init__(message)
        self.alpha = alpha
        self.nodes = nodes


class NodeLimitError(RIIError):
    """Branch-and-bound ran out of nodes before proving a result.

    ``partial`` holds whatever was computed before the limit was hit.
    """

    def __init__(self, message: str, *, partial=None):
        super().__init__(message)
        self.partial = partial


class UnsupportedInputError(RIIError, ValueError):
    """Input is well-formed but outside what the routine handles."""
