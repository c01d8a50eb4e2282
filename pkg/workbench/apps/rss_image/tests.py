"""Tests for rss_image app."""

import numpy as np
import pytest
from PIL import Image

from apps.core.exceptions import DataError, ShapeError
from apps.fingerprints.factories import FingerprintRecordFactory
from apps.fingerprints.schemas import AP_COUNT, Database
from apps.rss_image.layout import (
    build_layout,
    mean_detected_rss,
    reference_labels,
    render,
    render_many,
    spiral_order,
)
from apps.rss_image.storage import export_pgm, load_images, save_images


@pytest.fixture
def ranked_db():
    """AP 5 strongest, APs 7 and 10 tied at -60 dBm, the rest never detected."""
    return Database(
        records=(
            FingerprintRecordFactory(detected=(10, -40), loc_x=2, loc_y=0),
            FingerprintRecordFactory(detected=(5, -40), loc_x=0, loc_y=1),
            FingerprintRecordFactory(detected=(7, -60), loc_x=1, loc_y=0),
            FingerprintRecordFactory(detected=(10, -80), loc_x=2, loc_y=0),
        )
    )


class TestSpiral:
    """Tests for the centre-out cell order."""

    def test_three_by_three(self):
        """Test the walk right, down, left, up from the centre."""
        expected = [(1, 1), (1, 2), (2, 2), (2, 1), (2, 0), (1, 0), (0, 0), (0, 1), (0, 2)]
        assert spiral_order(3).tolist() == [list(cell) for cell in expected]

    @pytest.mark.parametrize("side", range(1, 9))
    def test_covers_every_cell_once(self, side):
        """Test each cell appears exactly once."""
        cells = spiral_order(side)
        assert len(cells) == side * side
        assert len({tuple(cell) for cell in cells.tolist()}) == side * side
        assert tuple(cells[0]) == ((side - 1) // 2, (side - 1) // 2)


class TestLayout:
    """Tests for AP placement and rendering."""

    def test_side(self, ranked_db):
        """Test the full AP set fits a 23 x 23 image."""
        layout = build_layout(ranked_db)
        assert layout.side == 23
        assert layout.ap_count == AP_COUNT

    def test_mean_over_detections(self, ranked_db):
        """Test means skip undetected rows."""
        means = mean_detected_rss(ranked_db)
        assert means[10] == -60.0 and means[5] == -40.0 and means[0] == -110.0

    def test_ranking(self, ranked_db):
        """Test strongest first with ties broken by AP index."""
        layout = build_layout(ranked_db)
        assert layout.ranking[:4].tolist() == [5, 7, 10, 0]
        assert layout.placement[5].tolist() == [11, 11]
        assert layout.placement[7].tolist() == [11, 12]
        assert layout.placement[10].tolist() == [12, 12]
        assert layout.placement[0].tolist() == [12, 11]

    def test_render_pixels(self, ranked_db):
        """Test pixel (rss + 110) / 110 and zero fill."""
        layout = build_layout(ranked_db)
        image = render(np.array(ranked_db.records[1].rss), layout)
        assert image.shape == (23, 23)
        assert image[11, 11] == pytest.approx(70.0 / 110.0)
        assert np.count_nonzero(image) == 1

    def test_render_many(self, ranked_db):
        """Test batch rendering matches single rendering."""
        layout = build_layout(ranked_db)
        rss = ranked_db.rss_matrix()
        images = render_many(rss, layout)
        for k, row in enumerate(rss):
            assert np.array_equal(images[k], render(row, layout))

    def test_render_is_affine(self, ranked_db, rng):
        """Test a blend of two RSS vectors renders as the blend of their images."""
        layout = build_layout(ranked_db)
        u, v = rng.uniform(-110, 0, AP_COUNT), rng.uniform(-110, 0, AP_COUNT)
        for alpha in (0.0, 0.25, 0.5, 1.0):
            blended = render(alpha * u + (1 - alpha) * v, layout)
            expected = alpha * render(u, layout) + (1 - alpha) * render(v, layout)
            assert np.allclose(blended, expected, rtol=0, atol=1e-12)

    def test_render_sentinel_is_zero(self, ranked_db):
        """Test an all-undetected vector gives a blank image."""
        image = render(np.full(AP_COUNT, -110.0), build_layout(ranked_db))
        assert not image.any()

    def test_render_wrong_length(self, ranked_db):
        """Test an RSS vector of the wrong length."""
        with pytest.raises(ShapeError):
            render(np.zeros(10), build_layout(ranked_db))

    def test_empty_database(self):
        """Test a layout needs records."""
        with pytest.raises(DataError):
            build_layout(Database())

    def test_reference_labels(self, ranked_db):
        """Test classes are sorted by (loc_y, loc_x)."""
        labels, points = reference_labels(ranked_db)
        assert points.tolist() == [[1, 0], [2, 0], [0, 1]]
        assert labels.tolist() == [1, 2, 0, 1]


class TestImageFiles:
    """Tests for image sets and previews."""

    def test_round_trip(self, ranked_db, tmp_path):
        """Test arrays and layout survive."""
        layout = build_layout(ranked_db)
        images = render_many(ranked_db.rss_matrix(), layout)
        labels, points = reference_labels(ranked_db)
        loaded, loaded_labels, loaded_points, loaded_layout = load_images(
            save_images(images, labels, points, layout, tmp_path / "images.npz")
        )
        assert np.array_equal(loaded, images)
        assert np.array_equal(loaded_labels, labels)
        assert np.array_equal(loaded_points, points)
        assert np.array_equal(loaded_layout.placement, layout.placement)

    def test_pgm(self, tmp_path):
        """Test an 8-bit grey preview scaled up per pixel."""
        image = np.zeros((23, 23))
        image[0, 0] = 1.0
        path = export_pgm(image, tmp_path / "rss.pgm", scale=2)
        assert path.read_bytes().startswith(b"P5")
        with Image.open(path) as picture:
            assert picture.mode == "L"
            assert picture.size == (46, 46)
            assert picture.getpixel((1, 1)) == 255
            assert picture.getpixel((2, 2)) == 0


class TestCommand:
    """Tests for render-images subcommand."""

    def test_render_images(self, run_command, db_csv, tmp_path):
        """Test one image per record and PGM previews."""
        out = tmp_path / "images.npz"
        result = run_command(
            "render_images", "--in", db_csv, "--out", out, "--pgm-dir", tmp_path / "pgm",
            "--pgm-count", "2",
        )
        assert result.code == 0
        images, labels, points, layout = load_images(out)
        assert images.shape == (96, 23, 23)
        assert len(points) == 24
        assert labels.max() == 23
        assert sorted(p.name for p in (tmp_path / "pgm").iterdir()) == [
            "rss_00000.pgm",
            "rss_00001.pgm",
        ]
