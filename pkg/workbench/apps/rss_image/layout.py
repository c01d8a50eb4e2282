"""Arrangement of APs on a square grid and rendering of RSS vectors as images.

One global layout is used for every sample: APs are ranked by their mean
detected RSS over the whole database (strongest first, ties by lower AP
index) and placed along a square spiral that starts at the grid centre, so
the globally strongest APs sit in the middle of every image.
"""

import math
from dataclasses import dataclass

import numpy as np

from apps.core.exceptions import DataError, ShapeError
from apps.fingerprints.schemas import RSS_SENTINEL, Database

RSS_SPAN = -float(RSS_SENTINEL)


def spiral_order(side: int) -> np.ndarray:
    """
    (side * side, 2) cells (row, col) from the centre outward.

    The walk goes right, down, left, up with run lengths 1, 1, 2, 2, 3, 3, ...
    starting at cell ((side - 1) // 2, (side - 1) // 2).
    """
    row = col = (side - 1) // 2
    cells = [(row, col)]
    moves = ((0, 1), (1, 0), (0, -1), (-1, 0))
    run, turn = 1, 0
    while len(cells) < side * side:
        for _ in range(2):
            d_row, d_col = moves[turn % 4]
            for _ in range(run):
                row, col = row + d_row, col + d_col
                if 0 <= row < side and 0 <= col < side:
                    cells.append((row, col))
            turn += 1
        run += 1
    return np.array(cells[: side * side], dtype=np.int64)


@dataclass(frozen=True)
class ApLayout:
    """
    Attributes:
        side: image side (smallest s with s * s >= ap_count)
        placement: (ap_count, 2) cell (row, col) of each AP index
        ranking: AP indices strongest first
        fill: pixel value of unused cells
    """

    side: int
    placement: np.ndarray
    ranking: np.ndarray
    fill: float = 0.0

    @property
    def ap_count(self) -> int:
        return len(self.placement)


def mean_detected_rss(db: Database) -> np.ndarray:
    """Mean RSS over the rows where each AP was detected; -110 if never detected."""
    rss = db.rss_matrix().astype(np.float64)
    detected = rss > RSS_SENTINEL
    counts = detected.sum(axis=0)
    totals = np.where(detected, rss, 0.0).sum(axis=0)
    return np.where(counts > 0, totals / np.maximum(counts, 1), float(RSS_SENTINEL))


def build_layout(db: Database) -> ApLayout:
    if not db.records:
        raise DataError("cannot build an AP layout from an empty database")
    means = mean_detected_rss(db)
    ap_count = len(means)
    # lexsort: last key is primary -> strongest mean first, then lower index
    ranking = np.lexsort((np.arange(ap_count), -means))
    side = math.isqrt(ap_count - 1) + 1
    cells = spiral_order(side)
    placement = np.empty((ap_count, 2), dtype=np.int64)
    placement[ranking] = cells[:ap_count]
    return ApLayout(side=side, placement=placement, ranking=ranking)


def render(rss: np.ndarray, layout: ApLayout) -> np.ndarray:
    """(side, side) image with pixel (rss + 110) / 110 at each AP's cell."""
    rss = np.asarray(rss, dtype=np.float64)
    if rss.shape != (layout.ap_count,):
        raise ShapeError(f"RSS vector must have {layout.ap_count} entries, got {rss.shape}")
    image = np.full((layout.side, layout.side), layout.fill)
    image[layout.placement[:, 0], layout.placement[:, 1]] = (rss - RSS_SENTINEL) / RSS_SPAN
    return image


def render_many(rss: np.ndarray, layout: ApLayout) -> np.ndarray:
    """(N, side, side) images of an (N, ap_count) RSS matrix."""
    rss = np.asarray(rss, dtype=np.float64)
    if rss.ndim != 2 or rss.shape[1] != layout.ap_count:
        raise ShapeError(f"RSS matrix must be (N, {layout.ap_count}), got {rss.shape}")
    images = np.full((len(rss), layout.side, layout.side), layout.fill)
    images[:, layout.placement[:, 0], layout.placement[:, 1]] = (rss - RSS_SENTINEL) / RSS_SPAN
    return images


def reference_labels(db: Database) -> tuple[np.ndarray, np.ndarray]:
    """
    Class index of every record and the (loc_x, loc_y) of each class.

    Classes are the distinct reference points sorted by (loc_y, loc_x).
    """
    loc = db.locations()
    points, labels = np.unique(loc[:, ::-1], axis=0, return_inverse=True)
    return labels.reshape(-1).astype(np.int64), points[:, ::-1].copy()

