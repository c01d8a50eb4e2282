"""Core utility functions."""

import tomllib
from pathlib import Path
from typing import Any, TypeVar

from pydantic import BaseModel, ValidationError

from .exceptions import ConfigError

ModelT = TypeVar("ModelT", bound=BaseModel)


def format_validation_error(exc: ValidationError) -> str:
    """
    Flatten a pydantic error into one line.

    Example: ``v_min: Input should be greater than 0; seed: ...``
    """
    parts = []
    for error in exc.errors():
        location = ".".join(str(p) for p in error["loc"]) or "value"
        parts.append(f"{location}: {error['msg']}")
    return "; ".join(parts)


def build_config(model: type[ModelT], **data: Any) -> ModelT:
    """Instantiate a config model, turning validation failures into ConfigError."""
    try:
        return model(**data)
    except ValidationError as exc:
        raise ConfigError(
            f"invalid {model.__name__}: {format_validation_error(exc)}",
            details={"errors": exc.errors(include_url=False, include_context=False)},
        ) from None


def load_toml_table(path: Path, table: str) -> dict[str, Any]:
    """Return one table of a TOML run-configuration file (empty if absent)."""
    try:
        with Path(path).open("rb") as fh:
            document = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    section = document.get(table, {})
    if not isinstance(section, dict):
        raise ConfigError(f"[{table}] in {path} must be a table")
    return section
