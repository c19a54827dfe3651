"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class QDEError(Exception):
    """Base class for all errors raised by :mod:`qde`."""


class ContainmentError(QDEError):
    """An operator does not fit inside the requested window."""


class IncompatibleError(QDEError):
    """Operands live on different site spaces."""


class DomainError(QDEError, ValueError):
    """A parameter is outside the domain of an operation."""


class ValidationError(QDEError, ValueError):
    """Input data violates a structural invariant (trace, positivity, completeness)."""


class ResourceError(QDEError):
    """A configured size cap would be exceeded."""


class NumericalError(QDEError):
    """A computed object failed its numerical contract.

    The offending residuals are kept in :attr:`residuals` so callers can log them.
    """

    def __init__(self, message: str, residuals: dict | None = None):
        super().__init__(message)
        self.residuals = dict(residuals or {})
