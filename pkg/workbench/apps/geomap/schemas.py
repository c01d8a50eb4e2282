"""Test-bed geometry shared by the map, mobility and ingest apps."""

import math

from pydantic import BaseModel, ConfigDict, Field, model_validator

from apps.core.exceptions import ConfigError

GRID_TOLERANCE = 1e-9


class TestBed(BaseModel):
    """Rectangular surveyed area ``[0, width_m] x [0, height_m]``."""

    __test__ = False  # not a pytest test class

    model_config = ConfigDict(frozen=True)

    width_m: float = Field(..., gt=0, description="Extent along x (m)")
    height_m: float = Field(..., gt=0, description="Extent along y (m)")
    spacing_m: float = Field(default=0.6, gt=0, description="Reference grid pitch (m)")

    @model_validator(mode="after")
    def _check_grid(self) -> "TestBed":
        for name, extent in (("width_m", self.width_m), ("height_m", self.height_m)):
            if not math.isfinite(extent):
                raise ValueError(f"{name} must be finite")
            cells = extent / self.spacing_m
            if abs(cells - round(cells)) * self.spacing_m > GRID_TOLERANCE:
                raise ValueError(
                    f"{name}={extent} is not an integer multiple of spacing_m={self.spacing_m}"
                )
        return self

    @classmethod
    def parse(cls, dims: str, spacing_m: float = 0.6) -> "TestBed":
        """Build a bed from a ``"30x7.2"`` style string."""
        try:
            width, height = (float(part) for part in dims.lower().split("x"))
        except ValueError as exc:
            raise ConfigError(
                f"bed must look like WIDTHxHEIGHT, got '{dims}'", details={"bed": dims}
            ) from exc
        try:
            return cls(width_m=width, height_m=height, spacing_m=spacing_m)
        except ValueError as exc:
            raise ConfigError(f"invalid bed '{dims}': {exc}") from exc

    @property
    def nx(self) -> int:
        """Reference nodes along x."""
        return round(self.width_m / self.spacing_m) + 1

    @property
    def ny(self) -> int:
        """Reference nodes along y."""
        return round(self.height_m / self.spacing_m) + 1

    @property
    def node_count(self) -> int:
        return self.nx * self.ny

    def contains(self, x: float, y: float, tol: float = GRID_TOLERANCE) -> bool:
        return -tol <= x <= self.width_m + tol and -tol <= y <= self.height_m + tol

    def label(self) -> str:
        return f"{self.width_m:g}x{self.height_m:g}"
