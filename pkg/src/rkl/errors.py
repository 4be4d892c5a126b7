"""Exception types shared across the package."""

from __future__ import annotations


class RklError(Exception):
    """Base class for library errors."""


class OutOfDomainError(RklError, ValueError):
    """A tabulated kernel was queried outside its grid hull."""


class AccuracyError(RklError):
    """An iterative or adaptive computation exhausted its budget.

    ``estimate`` carries the best value reached and ``bracket`` an interval
    known to contain the exact value when one is available.
    """

    def __init__(self, message, estimate=None, bracket=None):
        super().__init__(message)
        self.estimate = estimate
        self.bracket = bracket


class CharacteristicValueError(RklError):
    """The parameter lies (numerically) on a zero of the Fredholm determinant."""

    def __init__(self, lam, abs_det, scale=1.0):
        self.lam = complex(lam)
        self.abs_det = float(abs_det)
        self.scale = float(scale)
        super().__init__(
            f"lambda={self.lam!r} is a characteristic value: |D|={self.abs_det:.3e} "
            f"(scale {self.scale:.3e})"
        )


class ConfigError(RklError, ValueError):
    """Run configuration failed validation."""
