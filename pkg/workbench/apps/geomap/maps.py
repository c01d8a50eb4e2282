"""Geomagnetic field maps.

A :class:`GeoMap` is the C1 Clough-Tocher interpolant of the 3-component
field over the regular reference grid of a :class:`TestBed`. Every grid
cell is split along its (+x, +y) diagonal into two macro triangles.
"""

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional

import numpy as np

from apps.core.exceptions import ConfigError, DataError, DomainError, ShapeError

from . import clough_tocher
from .schemas import GRID_TOLERANCE, TestBed

if TYPE_CHECKING:
    from apps.fingerprints.schemas import Database, Direction

logger = logging.getLogger(__name__)

COMPONENTS = ("geo_x", "geo_y", "geo_z")


def grid_triangles(nx: int, ny: int) -> np.ndarray:
    """
    Triangles over an ``nx`` x ``ny`` node grid (node id = j * nx + i).

    Cell (i, j) yields the lower triangle (p00, p10, p11) at index
    ``2 * (j * (nx - 1) + i)`` and the upper one (p00, p11, p01) right after it.
    Both are counter-clockwise.
    """
    triangles = np.empty((2 * (nx - 1) * (ny - 1), 3), dtype=np.int64)
    pos = 0
    for j in range(ny - 1):
        for i in range(nx - 1):
            p00 = j * nx + i
            p10 = p00 + 1
            p01 = p00 + nx
            p11 = p01 + 1
            triangles[pos] = (p00, p10, p11)
            triangles[pos + 1] = (p00, p11, p01)
            pos += 2
    return triangles


@dataclass(frozen=True)
class Raster:
    """Field sampled on a regular pitch; ``values[row, col]`` is at (xs[col], ys[row])."""

    bed: TestBed
    pitch_m: float
    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray

    @property
    def shape_xy(self) -> tuple[int, int]:
        """(points along x, points along y)."""
        return len(self.xs), len(self.ys)


class GeoMap:
    """
    Immutable C1 interpolant of the field over a test bed.

    Attributes:
        bed: surveyed rectangle
        nodes: (N, 2) node positions in metres, node id = j * nx + i
        values: (N, 3) node field values (uT)
        gradients: (N, 2, 3) node partial derivatives d/dx, d/dy
        triangles: (M, 3) node ids of each macro triangle
        fine_grid: optional cached raster
    """

    def __init__(
        self,
        bed: TestBed,
        values_grid: np.ndarray,
        gradients_grid: Optional[np.ndarray] = None,
    ):
        values_grid = np.asarray(values_grid, dtype=np.float64)
        if values_grid.ndim == 2:
            values_grid = values_grid[:, :, None]
        if values_grid.shape[:2] != (bed.ny, bed.nx):
            raise ShapeError(
                f"values grid {values_grid.shape[:2]} does not match bed nodes "
                f"({bed.ny}, {bed.nx})"
            )
        if not np.all(np.isfinite(values_grid)):
            raise DataError("field values must be finite")

        self.bed = bed
        self.dx = bed.width_m / (bed.nx - 1)
        self.dy = bed.height_m / (bed.ny - 1)

        if gradients_grid is None:
            gradients_grid = estimate_gradients(values_grid, self.dx, self.dy)
        gradients_grid = np.asarray(gradients_grid, dtype=np.float64)
        if gradients_grid.shape != (bed.ny, bed.nx, 2, values_grid.shape[2]):
            raise ShapeError(f"gradients grid has shape {gradients_grid.shape}")

        xs = np.linspace(0.0, bed.width_m, bed.nx)
        ys = np.linspace(0.0, bed.height_m, bed.ny)
        gx, gy = np.meshgrid(xs, ys)
        self.nodes = np.column_stack([gx.ravel(), gy.ravel()])
        self.values = values_grid.reshape(-1, values_grid.shape[2])
        self.gradients = gradients_grid.reshape(-1, 2, values_grid.shape[2])
        self.triangles = grid_triangles(bed.nx, bed.ny)
        self.fine_grid: Optional[Raster] = None

        self._control = np.stack(
            [
                clough_tocher.control_points(
                    self.nodes[tri], self.values[tri], self.gradients[tri]
                )
                for tri in self.triangles
            ]
        )
        # Barycentric transform: (b1, b2) = inv([P1-P3, P2-P3]) @ (p - P3)
        corners = self.nodes[self.triangles]
        self._origin = corners[:, 2, :]
        columns = np.stack(
            [corners[:, 0, :] - self._origin, corners[:, 1, :] - self._origin], axis=2
        )
        self._inverse = np.linalg.inv(columns)

        for array in (self.nodes, self.values, self.gradients, self.triangles,
                      self._control, self._origin, self._inverse):
            array.flags.writeable = False

    @property
    def components(self) -> int:
        return self.values.shape[1]

    def values_grid(self) -> np.ndarray:
        return self.values.reshape(self.bed.ny, self.bed.nx, -1)

    def gradients_grid(self) -> np.ndarray:
        return self.gradients.reshape(self.bed.ny, self.bed.nx, 2, -1)

    def locate(self, points: np.ndarray) -> np.ndarray:
        """Macro triangle index of each in-bed point (N, 2)."""
        points = self._check_domain(points)
        nx, ny = self.bed.nx, self.bed.ny
        u = points[:, 0] / self.dx
        v = points[:, 1] / self.dy
        i = np.clip(np.floor(u).astype(np.int64), 0, nx - 2)
        j = np.clip(np.floor(v).astype(np.int64), 0, ny - 2)
        upper = (v - j) > (u - i)
        return 2 * (j * (nx - 1) + i) + upper.astype(np.int64)

    def barycentric(self, triangles: np.ndarray, points: np.ndarray) -> np.ndarray:
        """Barycentric coordinates (N, 3) of points w.r.t. the given macro triangles."""
        local = points - self._origin[triangles]
        b12 = np.einsum("nij,nj->ni", self._inverse[triangles], local)
        return np.column_stack([b12, 1.0 - b12[:, 0] - b12[:, 1]])

    def evaluate_on(self, triangles: np.ndarray, points: np.ndarray) -> np.ndarray:
        """Evaluate each point with the patch of a chosen macro triangle."""
        weights, _ = clough_tocher.split_barycentric(self.barycentric(triangles, points))
        return clough_tocher.evaluate(weights, self._control[triangles])

    def gradient_on(self, triangles: np.ndarray, points: np.ndarray) -> np.ndarray:
        """Analytic (N, 2, C) gradient using the patch of a chosen macro triangle."""
        bary = self.barycentric(triangles, points)
        weights, removed = clough_tocher.split_barycentric(bary)
        d_weights = clough_tocher.weight_derivatives(weights, self._control[triangles])

        # Rows of the inverse transform are grad b1, grad b2; grad b3 = -(sum)
        inv = self._inverse[triangles]
        grad_b = np.stack([inv[:, 0, :], inv[:, 1, :], -inv[:, 0, :] - inv[:, 1, :]], axis=1)
        n = len(points)
        grad_removed = grad_b[np.arange(n), removed]
        grad_w = np.empty((n, 4, 2))
        grad_w[:, :3, :] = grad_b - grad_removed[:, None, :]
        grad_w[np.arange(n), removed] = 0.0
        grad_w[:, 3, :] = 3.0 * grad_removed
        return np.einsum("nsc,nsd->ndc", d_weights, grad_w)

    def _check_domain(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if points.shape[1] != 2:
            raise ShapeError(f"points must have shape (N, 2), got {points.shape}")
        outside = (
            (points[:, 0] < -GRID_TOLERANCE)
            | (points[:, 0] > self.bed.width_m + GRID_TOLERANCE)
            | (points[:, 1] < -GRID_TOLERANCE)
            | (points[:, 1] > self.bed.height_m + GRID_TOLERANCE)
            | ~np.all(np.isfinite(points), axis=1)
        )
        if outside.any():
            first = int(np.argmax(outside))
            raise DomainError(
                f"point ({points[first, 0]}, {points[first, 1]}) is outside bed "
                f"{self.bed.label()}",
                details={"index": first, "count": int(outside.sum())},
            )
        return np.clip(points, 0.0, [self.bed.width_m, self.bed.height_m])


def estimate_gradients(values_grid: np.ndarray, dx: float, dy: float) -> np.ndarray:
    """
    Node gradients by central differences, one-sided on the boundary.

    Returns:
        (ny, nx, 2, C) with [..., 0, :] = d/dx and [..., 1, :] = d/dy.
    """
    d_dx = np.gradient(values_grid, dx, axis=1, edge_order=1)
    d_dy = np.gradient(values_grid, dy, axis=0, edge_order=1)
    return np.stack([d_dx, d_dy], axis=2)


def build_geomap(
    db: "Database",
    bed: TestBed,
    floor: Optional[str] = None,
    direction: Optional["Direction"] = None,
    fine_pitch_m: Optional[float] = None,
) -> GeoMap:
    """
    Build the field map of a bed from fingerprint records.

    Records at the same grid node are averaged per component (after the
    optional floor / direction selection). Every grid node must be covered.
    """
    from apps.fingerprints.selection import select

    records = select(db, floor=floor, direction=direction).records
    if not records:
        raise DataError("no records left after floor/direction selection")

    loc = np.array([(r.loc_x, r.loc_y) for r in records], dtype=np.int64)
    geo = np.array([r.geo for r in records], dtype=np.float64)

    outside = (loc[:, 0] >= bed.nx) | (loc[:, 1] >= bed.ny)
    if outside.any():
        rows = np.flatnonzero(outside)
        raise DataError(
            f"{len(rows)} record(s) lie outside bed {bed.label()} "
            f"(grid {bed.nx}x{bed.ny}), first at row {rows[0]}",
            details={"rows": rows[:20].tolist()},
        )

    node = loc[:, 1] * bed.nx + loc[:, 0]
    sums = np.zeros((bed.node_count, 3))
    counts = np.zeros(bed.node_count, dtype=np.int64)
    np.add.at(sums, node, geo)
    np.add.at(counts, node, 1)

    missing = np.flatnonzero(counts == 0)
    if len(missing):
        coords = [(int(k % bed.nx), int(k // bed.nx)) for k in missing]
        shown = ", ".join(f"({x},{y})" for x, y in coords[:10])
        raise DataError(
            f"{len(coords)} grid node(s) have no records: {shown}"
            + (" ..." if len(coords) > 10 else ""),
            details={"missing": coords},
        )

    values = (sums / counts[:, None]).reshape(bed.ny, bed.nx, 3)
    geomap = GeoMap(bed, values)
    logger.info(
        "Built geomagnetic map",
        extra={"extra": {"bed": bed.label(), "nodes": bed.node_count,
                         "records": len(records), "triangles": len(geomap.triangles)}},
    )
    if fine_pitch_m is not None:
        geomap.fine_grid = rasterize(geomap, fine_pitch_m)
    return geomap


def query_many(geomap: GeoMap, points: np.ndarray) -> np.ndarray:
    """Field values (N, C) at in-bed points (N, 2)."""
    points = geomap._check_domain(points)
    return geomap.evaluate_on(geomap.locate(points), points)


def query(geomap: GeoMap, point: np.ndarray) -> np.ndarray:
    """Field value (C,) at one in-bed point; no extrapolation."""
    return query_many(geomap, np.asarray(point, dtype=np.float64).reshape(1, 2))[0]


def gradient(geomap: GeoMap, point: np.ndarray) -> np.ndarray:
    """Analytic (2, C) gradient of the interpolant at one in-bed point."""
    points = geomap._check_domain(np.asarray(point, dtype=np.float64).reshape(1, 2))
    return geomap.gradient_on(geomap.locate(points), points)[0]


def _axis(extent: float, pitch_m: float, name: str) -> np.ndarray:
    steps = extent / pitch_m
    count = round(steps)
    if abs(steps - count) * pitch_m > GRID_TOLERANCE:
        raise ConfigError(f"pitch {pitch_m} does not divide bed {name} {extent}")
    return np.linspace(0.0, extent, count + 1)


def rasterize(geomap: GeoMap, pitch_m: float) -> Raster:
    """Sample the map on a regular pitch, row-major (rows along y)."""
    if not pitch_m > 0:
        raise ConfigError(f"pitch must be positive, got {pitch_m}")
    if pitch_m > geomap.bed.spacing_m + GRID_TOLERANCE:
        raise ConfigError(
            f"pitch {pitch_m} exceeds reference spacing {geomap.bed.spacing_m}"
        )
    xs = _axis(geomap.bed.width_m, pitch_m, "width")
    ys = _axis(geomap.bed.height_m, pitch_m, "height")
    gx, gy = np.meshgrid(xs, ys)
    values = query_many(geomap, np.column_stack([gx.ravel(), gy.ravel()]))
    return Raster(
        bed=geomap.bed,
        pitch_m=pitch_m,
        xs=xs,
        ys=ys,
        values=values.reshape(len(ys), len(xs), -1),
    )
