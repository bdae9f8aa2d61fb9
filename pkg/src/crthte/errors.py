"""Exception hierarchy shared across the package.

Errors are split by how callers recover from them: bad parameter values
(ValidationError), designs that cannot be built or scaled (ConfigurationError),
solve targets that no sample size can reach (InfeasibleError), inputs that
would materialize oversized matrices (ResourceLimitError), and malformed
design CSVs (DesignParseError, which carries line/column provenance).
"""

from __future__ import annotations


class CrthteError(Exception):
    """Base class for all package errors."""


class ValidationError(CrthteError, ValueError):
    """Parameter values violate their contract (range, PSD, consistency)."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class ConfigurationError(CrthteError, ValueError):
    """A design cannot be constructed from the requested configuration."""


class InfeasibleError(CrthteError):
    """The solve target is unreachable; carries the limiting diagnostic."""

    def __init__(self, message: str, asymptotic_power: float | None = None):
        super().__init__(message)
        self.asymptotic_power = asymptotic_power


class ResourceLimitError(CrthteError):
    """A dense computation would exceed the configured dimension cap."""


class EstimabilityError(CrthteError):
    """The design cannot identify the requested effect coordinate."""

    def __init__(self, message: str, coordinate: str | None = None):
        super().__init__(message)
        self.coordinate = coordinate


class DesignParseError(CrthteError, ValueError):
    """A design CSV is malformed; names the offending line and column."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        super().__init__(message)
        self.line = line
        self.column = column
