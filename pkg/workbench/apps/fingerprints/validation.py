"""Database consistency report."""

import logging
from collections import Counter
from typing import Optional

import numpy as np

from apps.core.exceptions import ConfigError
from apps.geomap.schemas import GRID_TOLERANCE, TestBed

from .schemas import RSS_SENTINEL, BoundsViolation, Database, ValidationReport

logger = logging.getLogger(__name__)


def validate(db: Database, bed: Optional[TestBed] = None) -> ValidationReport:
    """
    Summarize a parsed database.

    Counts detections per AP, records per floor and device, distinct reference
    points per floor and the frequency of every detected RSS value per floor.
    With a ``bed``, rows whose grid location falls outside it are listed.

    Raises:
        ConfigError: the bed and the database use different grid spacings
    """
    rss = db.rss_matrix()
    detected = rss > RSS_SENTINEL
    ap_detections = detected.sum(axis=0).astype(int).tolist() if len(db) else [0] * db.ap_count

    floors = [r.floor for r in db.records]
    histogram: dict[str, dict[int, int]] = {}
    points: dict[str, set[tuple[int, int]]] = {}
    for floor in sorted(set(floors)):
        rows = np.array([f == floor for f in floors])
        values, counts = np.unique(rss[rows][detected[rows]], return_counts=True)
        histogram[floor] = {int(v): int(c) for v, c in zip(values, counts)}
        points[floor] = {(r.loc_x, r.loc_y) for r in db.records if r.floor == floor}

    violations = []
    if bed is not None:
        if abs(bed.spacing_m - db.spacing_m) > GRID_TOLERANCE:
            raise ConfigError(
                f"bed spacing {bed.spacing_m} m does not match database spacing {db.spacing_m} m",
                details={"bed_spacing_m": bed.spacing_m, "db_spacing_m": db.spacing_m},
            )
        for row, record in enumerate(db.records):
            if record.loc_x >= bed.nx or record.loc_y >= bed.ny:
                violations.append(
                    BoundsViolation(row=row, loc_x=record.loc_x, loc_y=record.loc_y)
                )
        if violations:
            logger.warning(
                "Records outside test bed",
                extra={"extra": {"bed": bed.label(), "violations": len(violations)}},
            )

    return ValidationReport(
        record_count=len(db),
        ap_detections=ap_detections,
        detected_ap_count=sum(1 for count in ap_detections if count),
        floor_counts=dict(sorted(Counter(floors).items())),
        device_counts=dict(sorted(Counter(r.device for r in db.records).items())),
        reference_points={floor: len(p) for floor, p in points.items()},
        rss_histogram=histogram,
        bounds_violations=violations,
    )
