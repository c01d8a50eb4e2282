"""Toy fingerprint databases.

Used to exercise the pipeline without survey data: every node of a bed's
reference grid gets one record per (direction, device), the field comes
from a named model and the RSS from a log-distance path-loss model.
"""

import logging
from typing import Callable, Sequence

import numpy as np

from apps.core.exceptions import ConfigError
from apps.core.rng import STREAM_NOISE, make_rng
from apps.geomap.schemas import TestBed

from .schemas import (
    AP_COUNT,
    HEADINGS,
    RSS_MAX,
    RSS_SENTINEL,
    Database,
    Direction,
    FingerprintRecord,
)

logger = logging.getLogger(__name__)

FieldModel = Callable[[np.ndarray], np.ndarray]

# Readings weaker than this are reported as not detected
DETECTION_FLOOR_DBM = -100.0
BASE_TIMESTAMP_MS = 1_546_300_800_000

HEADING_DEG = {
    Direction.NORTH: 0.0,
    Direction.EAST: 90.0,
    Direction.SOUTH: 180.0,
    Direction.WEST: 270.0,
}


def linear_field(points: np.ndarray) -> np.ndarray:
    """Injective field (x, y, x + y) in uT."""
    x, y = points[:, 0], points[:, 1]
    return np.column_stack([x, y, x + y])


def constant_field(points: np.ndarray) -> np.ndarray:
    return np.tile([-25.6125, -5.79286, -29.9464], (len(points), 1))


def smooth_field(points: np.ndarray) -> np.ndarray:
    """Slowly varying field around typical indoor magnitudes."""
    x, y = points[:, 0], points[:, 1]
    return np.column_stack(
        [
            -25.0 + 4.0 * np.sin(0.35 * x) + 0.8 * y,
            -6.0 + 3.0 * np.cos(0.5 * y + 0.1 * x),
            -30.0 + 0.3 * x - 2.0 * np.sin(0.25 * x * y / 3.0),
        ]
    )


FIELD_MODELS: dict[str, FieldModel] = {
    "linear": linear_field,
    "constant": constant_field,
    "smooth": smooth_field,
}


def field_model(name: str) -> FieldModel:
    try:
        return FIELD_MODELS[name]
    except KeyError:
        raise ConfigError(
            f"unknown field model '{name}'", details={"choices": sorted(FIELD_MODELS)}
        ) from None


def path_loss_rss(
    points: np.ndarray,
    ap_positions: np.ndarray,
    rng: np.random.Generator,
    noise_db: float,
) -> np.ndarray:
    """(N, n_aps) integer RSS, with readings below the detection floor set to -110."""
    distance = np.linalg.norm(points[:, None, :] - ap_positions[None, :, :], axis=2)
    rss = -35.0 - 20.0 * np.log10(np.maximum(distance, 0.5))
    if noise_db > 0:
        rss = rss + rng.normal(0.0, noise_db, size=rss.shape)
    rss = np.clip(np.rint(rss), RSS_SENTINEL, RSS_MAX).astype(np.int64)
    rss[rss < DETECTION_FLOOR_DBM] = RSS_SENTINEL
    return rss


def synthesize_database(
    bed: TestBed,
    field: FieldModel = linear_field,
    floor: str = "4F",
    building: str = "IBSS",
    devices: Sequence[str] = ("device-a",),
    directions: Sequence[Direction] = HEADINGS,
    n_aps: int = 8,
    geo_noise_ut: float = 0.0,
    rss_noise_db: float = 2.0,
    seed: int = 0,
) -> Database:
    """
    Survey every reference node of ``bed``.

    Records are ordered by loc_y, then loc_x, then direction, then device.
    AP indices and positions, field noise and RSS noise are drawn from ``seed``.
    """
    if not 1 <= n_aps <= AP_COUNT:
        raise ConfigError(f"n_aps must be in [1, {AP_COUNT}], got {n_aps}")
    if not devices or not directions:
        raise ConfigError("at least one device and one direction are required")

    rng = make_rng(seed, STREAM_NOISE)
    ap_index = np.sort(rng.choice(AP_COUNT, size=n_aps, replace=False))
    ap_positions = rng.uniform([0.0, 0.0], [bed.width_m, bed.height_m], size=(n_aps, 2))

    loc_y, loc_x = np.meshgrid(np.arange(bed.ny), np.arange(bed.nx), indexing="ij")
    loc = np.column_stack([loc_x.ravel(), loc_y.ravel()])
    points = loc * bed.spacing_m
    base_field = np.asarray(field(points), dtype=np.float64)

    records = []
    for node, (x, y) in enumerate(loc):
        for direction in directions:
            for device in devices:
                k = len(records)
                geo = base_field[node] + rng.normal(0.0, geo_noise_ut, 3)
                heading = HEADING_DEG.get(direction, 0.0)
                ori = (heading + rng.normal(0.0, 1.0), rng.normal(0.0, 1.0), rng.normal(0.0, 1.0))
                rss = np.full(AP_COUNT, RSS_SENTINEL, dtype=np.int64)
                rss[ap_index] = path_loss_rss(
                    points[node : node + 1], ap_positions, rng, rss_noise_db
                )[0]
                records.append(
                    FingerprintRecord(
                        rss=tuple(int(v) for v in rss),
                        loc_x=int(x),
                        loc_y=int(y),
                        floor=floor,
                        building=building,
                        geo=tuple(float(v) for v in geo),
                        ori=tuple(float(v) for v in ori),
                        direction=direction,
                        device=device,
                        timestamp=BASE_TIMESTAMP_MS + 1000 * k,
                    )
                )

    logger.info(
        "Synthesized fingerprint database",
        extra={"extra": {"bed": bed.label(), "records": len(records), "aps": ap_index.tolist()}},
    )
    return Database(records=tuple(records), spacing_m=bed.spacing_m)
