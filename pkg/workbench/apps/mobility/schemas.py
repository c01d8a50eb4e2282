"""Mobility model configuration and traces."""

from dataclasses import dataclass
from enum import StrEnum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from apps.geomap.schemas import TestBed


class TraceModel(StrEnum):
    RWP = "rwp"
    GAMMA = "gamma"


class RwpConfig(BaseModel):
    """Random-waypoint parameters. Speeds in m/s, times in seconds."""

    model_config = ConfigDict(frozen=True)

    bed: TestBed
    n_steps: int = Field(..., gt=0, description="Positions per trace")
    v_min: float = Field(default=0.5, gt=0)
    v_max: float = Field(default=1.5, gt=0)
    max_pause_s: float = Field(default=0.0, ge=0)
    step_dt_s: float = Field(default=1.0, gt=0)
    seed: int = Field(default=42, ge=0, lt=2**64)

    @model_validator(mode="after")
    def _check_speeds(self) -> "RwpConfig":
        if self.v_min > self.v_max:
            raise ValueError(f"v_min={self.v_min} exceeds v_max={self.v_max}")
        return self


class GammaSpeed(BaseModel):
    """Per-leg speed law Gamma(shape_k, scale_theta)."""

    model_config = ConfigDict(frozen=True)

    shape_k: float = Field(default=2.0, gt=0)
    scale_theta: float = Field(default=0.5, gt=0)


@dataclass(frozen=True)
class Trace:
    """
    Positions of one walker, one row per step.

    Attributes:
        positions: (n_steps, 2) metres
        seed: seed the trace was drawn from
        model: mobility model
        waypoints: (legs, 2) waypoint of every leg started
        leg_speeds: (legs,) speed of every leg started (m/s)
    """

    positions: np.ndarray
    seed: int
    model: TraceModel
    waypoints: np.ndarray
    leg_speeds: np.ndarray

    def __len__(self) -> int:
        return len(self.positions)
