"""Exception types shared across the toolkit.

Validation errors signal bad inputs (configs, malformed data, illegal
parameters) and map to CLI exit code 2; estimation errors signal data
that is structurally fine but unusable for a particular estimator and
map to exit code 3 together with any other runtime failure.
"""

from __future__ import annotations


class CookielessError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(CookielessError):
    """Raised when inputs violate a documented precondition."""


class ConfigError(ValidationError):
    """Raised when a run config fails validation.

    Carries (field_path, message) pairs so callers can print one
    diagnostic per offending field.
    """

    def __init__(self, issues):
        self.issues = list(issues)
        lines = "; ".join(f"{path}: {msg}" for path, msg in self.issues)
        super().__init__(f"invalid run config: {lines}")


class EstimationError(CookielessError):
    """Raised when an estimator cannot be computed from the given data."""


class EmptyCellError(EstimationError):
    """Raised when a (cluster, treatment) cell has no observations."""


class NoContrastError(EstimationError):
    """Raised when a regression has a constant treatment indicator."""


class UnderdeterminedError(EstimationError):
    """Raised when a regression has fewer rows than coefficients plus one."""


class MissingBoundsError(EstimationError):
    """Raised when a bounded-outcome interval is requested without bounds."""
