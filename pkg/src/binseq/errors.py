"""Exception hierarchy.

Two families: :class:`ValidationError` for bad input (CLI exit code 1) and
:class:`NumericError` for failures during computation (CLI exit code 2).
"""

from __future__ import annotations


class BinseqError(Exception):
    """Base class for all package errors."""


class ValidationError(BinseqError, ValueError):
    """Input data or options violate a documented precondition."""

    def __init__(self, message: str, row: int | None = None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class ParseError(ValidationError):
    """A CSV field could not be parsed as a number."""


class DesignError(ValidationError):
    """Regressor matrix is rank deficient or too wide."""


class ParameterError(ValidationError):
    """Model parameters outside their admissible region (e.g. root condition)."""


class NumericError(BinseqError, ArithmeticError):
    """Non-finite intermediate or otherwise failed numerical evaluation."""

    def __init__(self, message: str, index: int | None = None):
        if index is not None:
            message = f"{message} (at t={index})"
        super().__init__(message)
        self.index = index


class ConvergenceError(NumericError):
    """Iterative fit did not converge; ``last`` holds the final iterate."""

    def __init__(self, message: str, last=None):
        super().__init__(message)
        self.last = last


class SeparationError(NumericError):
    """Binomial MLE does not exist because the data are separated."""


class FitError(NumericError):
    """Alternative-model fit failed (singular or indefinite Hessian)."""


class SingularityError(NumericError):
    """Information matrix (or its Schur complement) is not invertible."""


class DegenerateError(NumericError):
    """Statistic undefined for the data, e.g. all residuals zero."""
