"""Exception hierarchy shared by every workbench app."""

from typing import Any, Optional


class WorkbenchError(Exception):
    """
    Base exception for all workbench errors.

    Carries a stable machine-readable ``code`` next to the human message,
    plus optional ``details`` (row index, offending column, shapes, ...).
    """

    default_code = "WORKBENCH_ERROR"

    def __init__(
        self,
        message: str,
        code: Optional[str] = None,
        details: Optional[dict[str, Any]] = None,
    ):
        super().__init__(message)
        self.message = message
        self.code = code or self.default_code
        self.details = details or {}

    def __str__(self) -> str:
        return self.message


class ConfigError(WorkbenchError):
    """Invalid configuration value or combination."""

    default_code = "CONFIG"


class SchemaError(WorkbenchError):
    """Input does not follow the expected table layout."""

    default_code = "SCHEMA"


class ParseError(WorkbenchError):
    """A cell could not be converted to its declared type."""

    default_code = "PARSE"


class RangeError(WorkbenchError):
    """A value is outside its permitted range."""

    default_code = "RANGE"


class DataError(WorkbenchError):
    """Input data is well-formed but unusable (missing nodes, too short, ...)."""

    default_code = "DATA"


class DomainError(WorkbenchError):
    """Query point outside the domain of a map."""

    default_code = "OUT_OF_DOMAIN"


class ShapeError(WorkbenchError):
    """Array shapes do not line up."""

    default_code = "SHAPE"


class NumericalError(WorkbenchError):
    """Non-finite value where a finite one is required."""

    default_code = "NON_FINITE"


class StaleCacheError(WorkbenchError):
    """Backward pass called with a cache from before a parameter update."""

    default_code = "STALE_CACHE"


class StorageError(WorkbenchError):
    """Artifact file missing, unreadable or of the wrong format/version."""

    default_code = "STORAGE"
