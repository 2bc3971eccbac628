"""Exception hierarchy shared by every module.

Errors are split into two machine-distinguishable families so that callers
(and the command line front end) can map them to stable exit codes:

* :class:`DataError` — structural or validation problems with user-supplied
  inputs (bad shapes, unparsable cells, non-finite values, invalid fold
  layouts, provenance violations).
* :class:`NumericError` — well-formed inputs whose numerical content makes
  the requested computation undefined (zero variance under scaling,
  degenerate components, undefined weighted variance).

Both carry an optional ``details`` mapping with location information
(row/column indices, fold ids, offending values) for structured reporting.
"""

from __future__ import annotations

from typing import Any


class FastplsError(Exception):
    """Base class for all library errors."""

    def __init__(self, message: str, **details: Any) -> None:
        super().__init__(message)
        self.message = message
        self.details = {k: v for k, v in details.items() if v is not None}

    def to_dict(self) -> dict[str, Any]:
        """Machine-readable form used by the command line error channel."""
        return {
            "type": type(self).__name__,
            "message": self.message,
            "details": self.details,
        }


class DataError(FastplsError):
    """Structural or validation failure in user-supplied data."""


class NumericError(FastplsError):
    """Numerically undefined computation on otherwise valid data."""


class ZeroVarianceError(NumericError):
    """A column required to be scaled has (weighted) variance of zero."""


class UndefinedVarianceError(NumericError):
    """The requested variance estimator is undefined for these weights."""


class DegenerateComponentError(NumericError):
    """A component's score energy vanished before the requested count."""


class DegenerateFitError(NumericError):
    """A least-squares line fit is undefined (constant predictions)."""


class UndefinedRecallError(DataError):
    """A class has no true members, so its recall is undefined."""
