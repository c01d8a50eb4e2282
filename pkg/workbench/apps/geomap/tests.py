"""Tests for geomap app."""

import re

import numpy as np
import pandas as pd
import pytest

from apps.core.exceptions import ConfigError, DataError, DomainError
from apps.fingerprints.schemas import Database, Direction
from apps.fingerprints.selection import select
from apps.fingerprints.synthetic import smooth_field, synthesize_database
from apps.geomap.clough_tocher import MULTI_INDICES, control_points
from apps.geomap.maps import (
    GeoMap,
    build_geomap,
    gradient,
    grid_triangles,
    query,
    query_many,
    rasterize,
)
from apps.geomap.schemas import TestBed
from apps.geomap.storage import load_geomap, save_geomap


def random_points(rng, bed, count):
    return rng.uniform([0.0, 0.0], [bed.width_m, bed.height_m], size=(count, 2))


def shared_edges(bed):
    """(triangle a, triangle b, edge start, edge end) for every interior edge."""
    nx, ny = bed.nx, bed.ny
    dx, dy = bed.width_m / (nx - 1), bed.height_m / (ny - 1)
    edges = []
    for j in range(ny - 1):
        for i in range(nx - 1):
            lower = 2 * (j * (nx - 1) + i)
            p00 = np.array([i * dx, j * dy])
            p11 = p00 + [dx, dy]
            edges.append((lower, lower + 1, p00, p11))
            if j > 0:
                edges.append((lower, lower - 2 * (nx - 1) + 1, p00, p00 + [dx, 0.0]))
            if i < nx - 2:
                edges.append((lower, lower + 3, p00 + [dx, 0.0], p11))
    return edges


@pytest.fixture
def smooth_bed():
    return TestBed.parse("4.2x3")


@pytest.fixture
def smooth_map(smooth_bed):
    return build_geomap(synthesize_database(smooth_bed, field=smooth_field), smooth_bed)


class TestTestBed:
    """Tests for bed geometry."""

    def test_parse(self):
        """Test node counts of the survey bed."""
        bed = TestBed.parse("30x7.2")
        assert (bed.nx, bed.ny) == (51, 13)
        assert bed.node_count == 663

    def test_not_a_multiple(self):
        """Test extents must be multiples of the spacing."""
        with pytest.raises(ConfigError):
            TestBed.parse("1x1")

    def test_malformed(self):
        """Test a malformed dimension string."""
        with pytest.raises(ConfigError):
            TestBed.parse("30")


class TestGridTriangles:
    """Tests for the triangulation."""

    def test_count_and_orientation(self):
        """Test two counter-clockwise triangles per cell."""
        bed = TestBed.parse("1.8x1.2")
        triangles = grid_triangles(bed.nx, bed.ny)
        assert len(triangles) == 2 * (bed.nx - 1) * (bed.ny - 1)
        xs, ys = np.meshgrid(np.arange(bed.nx), np.arange(bed.ny))
        nodes = np.column_stack([xs.ravel(), ys.ravel()]).astype(float)
        a, b, c = nodes[triangles[:, 0]], nodes[triangles[:, 1]], nodes[triangles[:, 2]]
        ab, ac = b - a, c - a
        cross = ab[:, 0] * ac[:, 1] - ab[:, 1] * ac[:, 0]
        assert (cross > 0).all()


class TestControlPoints:
    """Tests for the per-triangle Bezier control net."""

    def test_every_index_assigned(self):
        """Test all 20 control points exist and are finite."""
        vertices = np.array([[0.0, 0.0], [0.6, 0.0], [0.6, 0.6]])
        values = np.array([[1.0], [2.0], [3.0]])
        gradients = np.ones((3, 2, 1))
        points = control_points(vertices, values, gradients)
        assert points.shape == (len(MULTI_INDICES), 1)
        assert np.all(np.isfinite(points))
        assert points[MULTI_INDICES.index((1, 1, 1, 0))].tolist() == [0.0]

    def test_map_of_zeros(self, small_bed):
        """Test a map builds from a grid of zeros and returns zeros."""
        geomap = GeoMap(small_bed, np.zeros((small_bed.ny, small_bed.nx, 3)))
        assert np.array_equal(query(geomap, [1.3, 0.7]), np.zeros(3))

    def test_constant_field(self, rng):
        """Test a constant field is reproduced at 1000 points on the survey bed."""
        bed = TestBed.parse("30x7.2")
        geomap = GeoMap(bed, np.full((bed.ny, bed.nx, 3), 42.5))
        values = query_many(geomap, random_points(rng, bed, 1000))
        assert np.max(np.abs(values - 42.5)) < 1e-9


class TestInterpolation:
    """Tests for the Clough-Tocher interpolant."""

    def test_reproduces_nodes(self, smooth_map):
        """Test the map passes through every node value."""
        values = query_many(smooth_map, smooth_map.nodes)
        assert np.max(np.abs(values - smooth_map.values)) < 1e-9

    def test_linear_field_exact(self, linear_map, small_bed, rng):
        """Test a linear field and its gradient are reproduced at 1000 points."""
        points = random_points(rng, small_bed, 1000)
        x, y = points[:, 0], points[:, 1]
        expected = np.column_stack([x, y, x + y])
        assert np.max(np.abs(query_many(linear_map, points) - expected)) < 1e-9
        for p in points[:50]:
            expected = [[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]]
            assert np.allclose(gradient(linear_map, p), expected, atol=1e-9)

    def test_continuity_across_edges(self, smooth_map, smooth_bed, rng):
        """Test value (C0) and gradient (C1) agree from both sides of 200 edge points."""
        edges = shared_edges(smooth_bed)
        picks = rng.integers(len(edges), size=200)
        ts = rng.random(200)
        for pick, t in zip(picks, ts):
            a, b, start, end = edges[pick]
            point = (start + t * (end - start))[None, :]
            tri_a, tri_b = np.array([a]), np.array([b])
            va = smooth_map.evaluate_on(tri_a, point)
            vb = smooth_map.evaluate_on(tri_b, point)
            assert np.max(np.abs(va - vb)) < 1e-9
            ga = smooth_map.gradient_on(tri_a, point)
            gb = smooth_map.gradient_on(tri_b, point)
            assert np.max(np.abs(ga - gb)) < 1e-6

    def test_gradient_matches_finite_difference(self, smooth_map, smooth_bed, rng):
        """Test the analytic gradient inside triangles."""
        h = 1e-6
        for p in random_points(rng, smooth_bed, 20) * 0.9 + 0.1:
            numeric = np.stack(
                [
                    (query(smooth_map, p + [h, 0.0]) - query(smooth_map, p - [h, 0.0])) / (2 * h),
                    (query(smooth_map, p + [0.0, h]) - query(smooth_map, p - [0.0, h])) / (2 * h),
                ]
            )
            assert np.allclose(gradient(smooth_map, p), numeric, atol=1e-5)

    def test_outside_bed(self, linear_map):
        """Test queries outside the bed fail with the offending index."""
        with pytest.raises(DomainError) as exc_info:
            query_many(linear_map, np.array([[0.5, 0.5], [3.5, 0.5]]))
        assert exc_info.value.details["index"] == 1

    def test_boundary_tolerance(self, linear_map, small_bed):
        """Test points a hair outside the edge are clamped."""
        value = query(linear_map, [small_bed.width_m + 1e-12, 0.0])
        assert value[0] == pytest.approx(small_bed.width_m)

    def test_single_cell(self):
        """Test a 2 x 2 node bed."""
        bed = TestBed.parse("0.6x0.6")
        geomap = GeoMap(bed, np.arange(12, dtype=float).reshape(2, 2, 3))
        assert len(geomap.triangles) == 2
        assert np.allclose(query(geomap, [0.6, 0.6]), [9.0, 10.0, 11.0])

    def test_immutable(self, linear_map):
        """Test node arrays are read-only."""
        with pytest.raises(ValueError):
            linear_map.values[0, 0] = 1.0


class TestBuildGeomap:
    """Tests for map construction from fingerprints."""

    def test_missing_nodes(self, linear_db, small_bed):
        """Test a node without records is reported."""
        records = tuple(r for r in linear_db.records if (r.loc_x, r.loc_y) != (2, 1))
        with pytest.raises(DataError) as exc_info:
            build_geomap(Database(records=records), small_bed)
        assert exc_info.value.details["missing"] == [(2, 1)]

    def test_records_outside_bed(self, linear_db):
        """Test records beyond the bed grid are rejected."""
        with pytest.raises(DataError):
            build_geomap(linear_db, TestBed.parse("1.2x1.2"))

    def test_direction_selection(self, small_bed):
        """Test a direction selector uses only that heading."""
        db = synthesize_database(small_bed, geo_noise_ut=1.0, seed=4)
        north = build_geomap(db, small_bed, direction=Direction.NORTH)
        only = build_geomap(select(db, direction=Direction.NORTH), small_bed)
        assert np.array_equal(north.values, only.values)

    def test_averages_duplicates(self, small_bed):
        """Test records of one node are averaged."""
        db = synthesize_database(small_bed, geo_noise_ut=1.0, seed=4)
        geomap = build_geomap(db, small_bed)
        node0 = np.array([r.geo for r in db.records if (r.loc_x, r.loc_y) == (0, 0)])
        assert np.allclose(geomap.values[0], node0.mean(axis=0))

    def test_empty_selection(self, linear_db, small_bed):
        """Test a floor with no records."""
        with pytest.raises(DataError):
            build_geomap(linear_db, small_bed, floor="nope")


class TestRasterize:
    """Tests for regular-pitch sampling."""

    def test_single_cell_upsampling(self):
        """Test a 0.6 m cell at 0.1 m gives exactly 7 x 7 samples."""
        bed = TestBed.parse("0.6x0.6")
        geomap = GeoMap(bed, np.zeros((2, 2, 3)))
        raster = rasterize(geomap, 0.1)
        assert raster.shape_xy == (7, 7)
        assert raster.values.shape == (7, 7, 3)

    def test_survey_bed_size(self, linear_map):
        """Test the raster axes cover the bed."""
        raster = rasterize(linear_map, 0.1)
        assert raster.shape_xy == (31, 19)
        assert raster.xs[-1] == pytest.approx(3.0)

    def test_raster_matches_queries(self, linear_map):
        """Test raster values equal pointwise queries."""
        raster = rasterize(linear_map, 0.3)
        assert np.allclose(raster.values[2, 3], query(linear_map, [raster.xs[3], raster.ys[2]]))

    @pytest.mark.parametrize("pitch", [0.0, -0.1, 0.7, 0.25])
    def test_bad_pitch(self, linear_map, pitch):
        """Test non-positive, too coarse and non-dividing pitches."""
        with pytest.raises(ConfigError):
            rasterize(linear_map, pitch)


class TestStorage:
    """Tests for map files."""

    def test_round_trip_bit_identical(self, smooth_map, smooth_bed, rng, tmp_path):
        """Test a loaded map answers queries identically."""
        loaded = load_geomap(save_geomap(smooth_map, tmp_path / "map.npz"))
        points = random_points(rng, smooth_bed, 100)
        assert np.array_equal(query_many(loaded, points), query_many(smooth_map, points))
        assert loaded.bed == smooth_bed

    def test_fine_grid_restored(self, linear_db, small_bed, tmp_path):
        """Test the cached raster is rebuilt on load."""
        geomap = build_geomap(linear_db, small_bed, fine_pitch_m=0.2)
        loaded = load_geomap(save_geomap(geomap, tmp_path / "map.npz"))
        assert np.array_equal(loaded.fine_grid.values, geomap.fine_grid.values)


class TestCommands:
    """Tests for build-map and rasterize subcommands."""

    def test_build_and_rasterize(self, run_command, db_csv, tmp_path):
        """Test CSV and proportional SVG output."""
        map_path = tmp_path / "map.npz"
        built = run_command("build_map", "--in", db_csv, "--bed", "3x1.8", "--out", map_path)
        assert built.code == 0
        result = run_command(
            "rasterize", "--map", map_path, "--pitch", "0.1", "--out", tmp_path / "r.csv"
        )
        assert result.code == 0

        frame = pd.read_csv(tmp_path / "r.csv", float_precision="round_trip")
        assert list(frame.columns) == ["x", "y", "geo_x", "geo_y", "geo_z"]
        assert len(frame) == 31 * 19
        assert np.allclose(frame["geo_z"], frame["x"] + frame["y"], atol=1e-9)

        svg = (tmp_path / "r_geo_x.svg").read_text()
        width = float(re.search(r'<svg[^>]*\swidth="([\d.]+)pt"', svg).group(1))
        height = float(re.search(r'<svg[^>]*\sheight="([\d.]+)pt"', svg).group(1))
        assert width / height == pytest.approx(3.0 / 1.8, rel=1e-3)

    def test_rasterize_is_deterministic(self, run_command, db_csv, tmp_path):
        """Test equal inputs give byte-identical files."""
        map_path = tmp_path / "map.npz"
        run_command("build_map", "--in", db_csv, "--bed", "3x1.8", "--out", map_path)
        run_command("rasterize", "--map", map_path, "--pitch", "0.3", "--out", tmp_path / "a.csv")
        run_command("rasterize", "--map", map_path, "--pitch", "0.3", "--out", tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        assert (tmp_path / "a_geo_y.svg").read_bytes() == (tmp_path / "b_geo_y.svg").read_bytes()
