"""Exception types shared across the toolkit.

Everything raised on bad caller input derives from ``InvalidInput`` so that
callers (and the CLI) can catch one base class and map it to a usage error.
"""

from __future__ import annotations

__all__ = [
    "CovspectraError",
    "InvalidInput",
    "DimensionMismatch",
    "NotPSD",
    "InvalidParameter",
    "InvalidTestMatrix",
    "InvalidLadder",
    "InvalidInstance",
    "InfiniteFourthMoment",
    "DegenerateDenominator",
    "SpecValidationError",
]


class CovspectraError(Exception):
    """Base class for all toolkit errors."""


class InvalidInput(CovspectraError, ValueError):
    """Input violates a documented precondition."""


class DimensionMismatch(InvalidInput):
    """Operands have incompatible shapes."""


class NotPSD(InvalidInput):
    """Matrix required to be positive semi-definite is not."""


class InvalidParameter(InvalidInput):
    """Scalar parameter outside its admissible range."""


class InvalidTestMatrix(InvalidInput):
    """Test matrix violates a structural requirement (e.g. nonzero diagonal)."""


class InvalidLadder(InvalidInput):
    """Size ladder is not increasing or mixes aspect ratios."""


class InvalidInstance(InvalidInput):
    """Inequality-check instance violates the preconditions of its statement."""


class InfiniteFourthMoment(InvalidInput):
    """Entry law has no finite fourth moment, but one was required."""


class DegenerateDenominator(CovspectraError, ArithmeticError):
    """A denominator in a rank-update identity is numerically zero."""


class SpecValidationError(InvalidInput):
    """Experiment description failed schema validation."""
