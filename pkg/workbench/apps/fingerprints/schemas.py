"""Pydantic schemas for fingerprint databases."""

import math
from enum import StrEnum
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

AP_COUNT = 516
RSS_SENTINEL = -110
RSS_MAX = 0
DEFAULT_SPACING_M = 0.6


# ============== Column layout ==============

RSS_COLUMNS = tuple(f"WAP{i:03d}" for i in range(AP_COUNT))
LOCATION_COLUMNS = ("Loc_x", "Loc_y", "Floor", "Building")
SENSOR_COLUMNS = ("GeoX", "GeoY", "GeoZ", "OriX", "OriY", "OriZ")
OPTIONAL_COLUMNS = ("Direction", "Device", "Timestamp")
REQUIRED_COLUMNS = RSS_COLUMNS + LOCATION_COLUMNS + SENSOR_COLUMNS
ALL_COLUMNS = REQUIRED_COLUMNS + OPTIONAL_COLUMNS


class Direction(StrEnum):
    """Heading or posture of the capture device."""

    NORTH = "North"
    SOUTH = "South"
    EAST = "East"
    WEST = "West"
    LEFT = "Left"
    RIGHT = "Right"
    UP = "Up"


HEADINGS = (Direction.NORTH, Direction.EAST, Direction.SOUTH, Direction.WEST)


# ============== Records ==============


class FingerprintRecord(BaseModel):
    """One database row: RSS vector, grid location, field and orientation samples."""

    model_config = ConfigDict(frozen=True)

    rss: tuple[int, ...] = Field(..., description="RSS per AP in dBm, -110 = not detected")
    loc_x: int = Field(..., ge=0, description="Grid column (cells of spacing_m)")
    loc_y: int = Field(..., ge=0, description="Grid row (cells of spacing_m)")
    floor: str = Field(..., description="Opaque floor token, e.g. '5E'")
    building: str = Field(..., description="Opaque building token, e.g. 'IBSS'")
    geo: tuple[float, float, float] = Field(..., description="Field X/Y/Z in uT")
    ori: tuple[float, float, float] = Field(..., description="Orientation X/Y/Z in degrees")
    direction: Optional[Direction] = None
    device: str = ""
    timestamp: Optional[int] = Field(None, description="Capture time in ms")

    @field_validator("rss")
    @classmethod
    def _check_rss(cls, value: tuple[int, ...]) -> tuple[int, ...]:
        if len(value) != AP_COUNT:
            raise ValueError(f"rss must have {AP_COUNT} entries, got {len(value)}")
        for ap, rss in enumerate(value):
            if not RSS_SENTINEL <= rss <= RSS_MAX:
                raise ValueError(f"WAP{ap:03d}={rss} outside [{RSS_SENTINEL}, {RSS_MAX}]")
        return value

    @field_validator("geo", "ori")
    @classmethod
    def _check_finite(cls, value: tuple[float, float, float]) -> tuple[float, float, float]:
        if not all(math.isfinite(v) for v in value):
            raise ValueError("must be finite")
        return value

    @property
    def detected(self) -> list[int]:
        """Indices of APs with a reading above the sentinel."""
        return [ap for ap, rss in enumerate(self.rss) if rss > RSS_SENTINEL]


class Database(BaseModel):
    """Ordered fingerprint records of one survey."""

    model_config = ConfigDict(frozen=True)

    records: tuple[FingerprintRecord, ...] = ()
    ap_count: int = AP_COUNT
    spacing_m: float = Field(default=DEFAULT_SPACING_M, gt=0)

    def __len__(self) -> int:
        return len(self.records)

    def rss_matrix(self) -> np.ndarray:
        """(N, ap_count) int64 RSS matrix."""
        if not self.records:
            return np.empty((0, self.ap_count), dtype=np.int64)
        return np.array([r.rss for r in self.records], dtype=np.int64)

    def locations(self) -> np.ndarray:
        """(N, 2) grid indices (loc_x, loc_y)."""
        return np.array([(r.loc_x, r.loc_y) for r in self.records], dtype=np.int64).reshape(-1, 2)

    def positions_m(self) -> np.ndarray:
        """(N, 2) record positions in metres."""
        return self.locations() * self.spacing_m


# ============== Reports ==============


class BoundsViolation(BaseModel):
    row: int
    loc_x: int
    loc_y: int


class ValidationReport(BaseModel):
    """Summary statistics and bound checks of a parsed database."""

    record_count: int = 0
    ap_detections: list[int] = Field(
        default_factory=list, description="Rows in which each AP was detected"
    )
    detected_ap_count: int = Field(0, description="APs detected at least once")
    floor_counts: dict[str, int] = Field(default_factory=dict)
    device_counts: dict[str, int] = Field(default_factory=dict)
    reference_points: dict[str, int] = Field(
        default_factory=dict, description="Distinct (loc_x, loc_y) per floor"
    )
    rss_histogram: dict[str, dict[int, int]] = Field(
        default_factory=dict, description="Frequency of each detected RSS value per floor"
    )
    bounds_violations: list[BoundsViolation] = Field(default_factory=list)
