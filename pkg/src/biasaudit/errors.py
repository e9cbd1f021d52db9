"""Exception types shared across the package."""

from __future__ import annotations

from dataclasses import dataclass


class AuditError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(AuditError):
    """A configuration value is missing, malformed, or inconsistent."""


class SchemaError(AuditError):
    """A cohort schema is self-contradictory or does not match the data header."""


@dataclass(frozen=True)
class RowIssue:
    """One problem found while reading a cohort file.

    ``line`` is the 1-based line number in the source (the header is line 1);
    ``None`` when the issue is not tied to a single line.
    """

    line: int | None
    column: str | None
    message: str

    def to_dict(self) -> dict:
        return {"line": self.line, "column": self.column, "message": self.message}


class CohortValidationError(AuditError):
    """Raised when cohort rows are malformed beyond repair.

    Carries every issue found, not just the first, so a caller can emit a
    complete validation report in one pass.
    """

    def __init__(self, issues: list[RowIssue]):
        self.issues = list(issues)
        head = "; ".join(i.message for i in self.issues[:3])
        more = f" (+{len(self.issues) - 3} more)" if len(self.issues) > 3 else ""
        super().__init__(f"cohort validation failed: {head}{more}")


class UndefinedMetricError(AuditError):
    """A metric has no defined value on the given data (e.g. single-class AUROC)."""


class FitError(AuditError):
    """Model fitting could not proceed (structurally singular system)."""


class PropensityError(AuditError):
    """Propensity estimation was asked to do something unsound."""


class InsufficientDataError(AuditError):
    """Not enough usable data to run the requested analysis."""
