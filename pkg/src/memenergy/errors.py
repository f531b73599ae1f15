"""Exception and warning types shared across the package.

Each error class carries the CLI exit code it maps to, so the command-line
front end can translate failures into machine-readable classes.
"""

from __future__ import annotations


class MemEnergyError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class InputError(MemEnergyError, ValueError):
    """Malformed input: parse failure, schema violation, out-of-range value."""

    exit_code = 2


class InvalidModelError(InputError):
    """Energy model coefficients are not finite numbers."""


class InvalidDenominatorError(InputError):
    """A ratio was requested with a zero, negative, or missing denominator."""


class NumericalError(MemEnergyError, ArithmeticError):
    exit_code = 3


class InsufficientDataError(NumericalError):
    pass


class DegenerateDesignError(NumericalError):
    """The regression design matrix is rank deficient or badly conditioned."""


class ZeroVarianceError(NumericalError):
    pass


class CoverageError(MemEnergyError):
    """An interval is not covered by a trace."""

    exit_code = 4

    def __init__(self, message: str, interval: str | None = None, source: str | None = None):
        super().__init__(message)
        self.interval = interval
        self.source = source


class EnergyWarning(UserWarning):
    """Non-fatal diagnostic about energy values or model fits."""


class TraceWarning(UserWarning):
    """Non-fatal diagnostic raised while integrating traces."""
