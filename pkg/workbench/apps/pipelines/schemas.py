"""Training configurations.

Run-configuration files are TOML with an ``[lstm]`` and/or ``[cnn]`` table
whose keys are the field names below, for example::

    [lstm]
    time_steps = 30
    hidden = 128
    batch_size = 5
    epochs = 100
    dropout = 0.2
    split = 0.75
"""

from enum import StrEnum
from pathlib import Path
from typing import Any, Optional, TypeVar

from pydantic import BaseModel, ConfigDict, Field, field_validator

from apps.core.utils import build_config, load_toml_table


class OptimizerFields(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    lr: float = Field(default=0.001, gt=0)
    beta1: float = Field(default=0.9, ge=0, lt=1)
    beta2: float = Field(default=0.999, ge=0, lt=1)
    eps: float = Field(default=1e-8, gt=0)
    seed: int = Field(default=42, ge=0)


class LstmPipelineConfig(OptimizerFields):
    """Stacked-LSTM trajectory estimator settings."""

    time_steps: int = Field(default=30, gt=0)
    hidden: int = Field(default=128, gt=0)
    layers: int = Field(default=2, gt=0)
    batch_size: int = Field(default=5, gt=0)
    epochs: int = Field(default=100, ge=0)
    dropout: float = Field(default=0.2, ge=0, lt=1)
    split: float = Field(default=0.75, gt=0, lt=1)
    spacing_m: float = Field(default=0.6, gt=0, description="Accuracy threshold (m)")


ConfigT = TypeVar("ConfigT", bound=OptimizerFields)


class SplitMode(StrEnum):
    RANDOM = "random"
    CHRONOLOGICAL = "chronological"


class CnnPipelineConfig(OptimizerFields):
    """RSS-image classifier settings."""

    channels: tuple[int, ...] = Field(default=(8, 16, 16, 32))
    kernel: int = Field(default=3, gt=0)
    dense_units: int = Field(default=64, gt=0)
    dropout: tuple[float, float] = (0.25, 0.5)
    epochs: int = Field(default=50, ge=0)
    batch_size: int = Field(default=16, gt=0)
    split: float = Field(default=0.75, gt=0, lt=1)
    split_mode: SplitMode = SplitMode.RANDOM
    spacing_m: float = Field(default=0.6, gt=0)

    @field_validator("channels")
    @classmethod
    def _check_channels(cls, value: tuple[int, ...]) -> tuple[int, ...]:
        if len(value) != 4 or any(c <= 0 for c in value):
            raise ValueError("exactly 4 positive convolution channel counts are required")
        return value

    @field_validator("kernel")
    @classmethod
    def _check_kernel(cls, value: int) -> int:
        if value % 2 == 0:
            raise ValueError("kernel size must be odd")
        return value

    @field_validator("dropout")
    @classmethod
    def _check_dropout(cls, value: tuple[float, float]) -> tuple[float, float]:
        if not all(0.0 <= rate < 1.0 for rate in value):
            raise ValueError("dropout rates must be in [0, 1)")
        return value


def load_config(
    model: type[ConfigT],
    table: str,
    path: Optional[Path] = None,
    defaults: Optional[dict[str, Any]] = None,
    **overrides: Any,
) -> ConfigT:
    """
    Merge, last wins: ``defaults``, the TOML table (if a file is given),
    then the non-None ``overrides``.
    """
    data: dict[str, Any] = dict(defaults or {})
    if path:
        data.update(load_toml_table(path, table))
    data.update({key: value for key, value in overrides.items() if value is not None})
    return build_config(model, **data)
