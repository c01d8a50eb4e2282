"""Tests for metrics app."""

import json

import numpy as np
import pandas as pd
import pytest

from apps.core.exceptions import DataError, ShapeError
from apps.geomap.schemas import TestBed
from apps.metrics.plots import (
    bed_figsize,
    emit_error_boxes,
    emit_history,
    emit_rss_histogram,
    emit_trace,
    emit_waypoint_density,
    read_history,
)
from apps.metrics.stats import (
    EpochRecord,
    central_band,
    error_stats,
    nearest_rank,
    summarize_errors,
)


def on_x_axis(values):
    return np.column_stack([values, np.zeros(len(values))])


@pytest.fixture
def history():
    return [
        EpochRecord(epoch=1, train_loss=0.1, test_loss=1 / 3, accuracy=0.25, train_accuracy=0.5,
                    test_mean_err_m=2.0 / 7.0),
        EpochRecord(epoch=2, train_loss=0.07, test_loss=0.2, accuracy=0.5, train_accuracy=0.75,
                    test_mean_err_m=0.123456789012345678),
    ]


class TestStats:
    """Tests for error statistics."""

    def test_small_example(self):
        """Test errors 1, 2, 3, 4 m."""
        report = error_stats(on_x_axis([1.0, 2.0, 3.0, 4.0]), np.zeros((4, 2)))
        assert report.n_samples == 4
        assert report.mean_err_m == 2.5
        assert report.median_err_m == 2.0
        assert report.max_err_m == 4.0
        assert report.p75_box == (1.0, 4.0)
        assert report.p95_whisker == (1.0, 4.0)

    def test_perfect_prediction(self, rng):
        """Test equal positions give zero everywhere."""
        points = rng.uniform(size=(50, 2))
        report = error_stats(points, points)
        assert report.mean_err_m == 0.0 and report.max_err_m == 0.0
        assert report.p95_whisker == (0.0, 0.0)

    def test_euclidean(self):
        """Test the error is the Euclidean distance."""
        report = error_stats(np.array([[3.0, 4.0]]), np.zeros((1, 2)))
        assert report.mean_err_m == 5.0

    def test_bands_match_sorted_ranks(self, rng):
        """Test bands against ranks read off the sorted sample."""
        errors = rng.exponential(size=10_000)
        ordered = np.sort(errors)
        report = summarize_errors(errors)
        assert report.median_err_m == ordered[4_999]
        assert report.p75_box == (ordered[1_249], ordered[8_749])
        assert report.p95_whisker == (ordered[249], ordered[9_749])
        assert report.max_err_m == ordered[-1]
        inside = ordered[1_249:8_750]
        assert report.p75_mean_err_m == pytest.approx(inside.mean())

    def test_bands_nest(self, rng):
        """Test the 75% box lies inside the 95% whiskers."""
        for n in (1, 2, 3, 7, 40, 333):
            report = summarize_errors(rng.exponential(size=n))
            low95, high95 = report.p95_whisker
            low75, high75 = report.p75_box
            assert low95 <= low75 <= report.median_err_m <= high75 <= high95 <= report.max_err_m

    def test_nearest_rank(self):
        """Test k = ceil(p * N) clamped to [1, N]."""
        values = np.arange(1.0, 8.0)
        assert nearest_rank(values, 0.5) == 4.0
        assert nearest_rank(values, 0.0) == 1.0
        assert nearest_rank(values, 1.0) == 7.0
        assert central_band(np.arange(1.0, 11.0), 0.8) == (1.0, 9.0)

    def test_empty(self):
        """Test no samples."""
        with pytest.raises(DataError):
            summarize_errors(np.array([]))

    def test_shape_mismatch(self):
        """Test prediction and truth must align."""
        with pytest.raises(ShapeError):
            error_stats(np.zeros((3, 2)), np.zeros((4, 2)))


class TestPlots:
    """Tests for figures and their CSV tables."""

    def test_history_values_exact(self, history, tmp_path):
        """Test the CSV reproduces the records bit-exactly."""
        csv_path, svg_path = emit_history(history, tmp_path / "history.svg")
        assert csv_path == tmp_path / "history.csv"
        assert svg_path == tmp_path / "history.svg" and svg_path.is_file()
        assert [r.model_dump() for r in read_history(csv_path)] == [r.model_dump() for r in history]

    def test_empty_history(self, tmp_path):
        """Test an empty history gives a header-only table."""
        csv_path, svg_path = emit_history([], tmp_path / "history")
        lines = csv_path.read_text(encoding="utf-8").splitlines()
        assert lines == [",".join(EpochRecord.model_fields)]
        assert svg_path.is_file()

    def test_boxes_match_report(self, rng, tmp_path):
        """Test the box table holds the report values exactly."""
        reports = {
            "a": summarize_errors(rng.exponential(size=100)),
            "b": summarize_errors(rng.exponential(size=30)),
        }
        csv_path, _ = emit_error_boxes(reports, tmp_path / "boxes")
        frame = pd.read_csv(csv_path, float_precision="round_trip")
        assert frame["label"].tolist() == ["a", "b"]
        for row, report in zip(frame.itertuples(), reports.values()):
            assert row.mean_err_m == report.mean_err_m
            assert (row.p75_low, row.p75_high) == report.p75_box
            assert (row.p95_low, row.p95_high) == report.p95_whisker
            assert row.max_err_m == report.max_err_m

    def test_svg_deterministic(self, history, tmp_path):
        """Test equal inputs give equal bytes."""
        _, first = emit_history(history, tmp_path / "one")
        _, second = emit_history(history, tmp_path / "two")
        assert first.read_bytes() == second.read_bytes()

    def test_every_svg_has_a_table(self, rng, tmp_path):
        """Test each emitter writes a CSV twin next to its SVG."""
        bed = TestBed.parse("3x1.8")
        written = [
            emit_trace(rng.uniform([0, 0], [3, 1.8], size=(20, 2)), bed, tmp_path / "trace"),
            emit_waypoint_density(
                rng.uniform([0, 0], [3, 1.8], size=(50, 2)), bed, tmp_path / "wp"
            ),
            emit_rss_histogram({"4F": {-50: 3, -70: 1}}, tmp_path / "rss"),
        ]
        for csv_path, svg_path in written:
            assert csv_path.suffix == ".csv" and svg_path.suffix == ".svg"
            assert csv_path.with_suffix("") == svg_path.with_suffix("")
            assert csv_path.is_file() and svg_path.is_file()

    def test_waypoint_density_counts(self, rng, tmp_path):
        """Test every waypoint lands in one cell."""
        bed = TestBed.parse("3x1.8")
        waypoints = rng.uniform([0, 0], [3, 1.8], size=(500, 2))
        csv_path, _ = emit_waypoint_density(waypoints, bed, tmp_path / "wp")
        frame = pd.read_csv(csv_path, float_precision="round_trip")
        assert len(frame) == (bed.nx - 1) * (bed.ny - 1)
        assert frame["count"].sum() == 500

    def test_bed_aspect(self):
        """Test figures keep the bed's aspect ratio."""
        width, height = bed_figsize(TestBed.parse("30x7.2"))
        assert width / height == pytest.approx(30 / 7.2)


class TestEvaluateCommand:
    """Tests for evaluate subcommand."""

    @pytest.fixture
    def position_files(self, tmp_path):
        pred = tmp_path / "pred.csv"
        truth = tmp_path / "truth.csv"
        pd.DataFrame(
            {"step": [1, 0, 2, 3], "x": [2.0, 1.0, 3.0, 4.0], "y": 0.0}
        ).to_csv(pred, index=False)
        pd.DataFrame(
            {"trace_id": [0, 0, 0, 0, 1], "step": [0, 1, 2, 3, 0], "x": 0.0, "y": 0.0}
        ).to_csv(truth, index=False)
        return pred, truth

    def test_position_files(self, run_command, position_files, tmp_path):
        """Test the report of two position files."""
        pred, truth = position_files
        report_path = tmp_path / "report.json"
        result = run_command(
            "evaluate", "--pred", pred, "--truth", truth, "--report", report_path,
            "--boxes", tmp_path / "boxes",
        )
        assert result.code == 0, result.err
        report = json.loads(report_path.read_text(encoding="utf-8"))
        assert report["mean_err_m"] == 2.5
        assert report["max_err_m"] == 4.0
        assert report["p75_box"] == [1.0, 4.0]
        assert pd.read_csv(tmp_path / "boxes.csv")["label"].tolist() == ["model"]

    def test_attach_history(self, run_command, position_files, history, tmp_path):
        """Test the per-epoch history rides along in the report."""
        pred, truth = position_files
        csv_path, _ = emit_history(history, tmp_path / "history")
        report_path = tmp_path / "report.json"
        run_command(
            "evaluate", "--pred", pred, "--truth", truth, "--history", csv_path,
            "--report", report_path,
        )
        report = json.loads(report_path.read_text(encoding="utf-8"))
        assert [r["epoch"] for r in report["per_epoch"]] == [1, 2]

    def test_nothing_to_evaluate(self, run_command):
        """Test neither a model nor position files."""
        result = run_command("evaluate")
        assert result.code == 1
        assert "code=CONFIG" in result.err


class TestEndToEnd:
    """The whole chain of subcommands on the small bed."""

    def test_lstm_chain(self, run_command, tmp_path):
        """Test survey to trajectory report."""
        run_toml = tmp_path / "run.toml"
        run_toml.write_text(
            "[lstm]\nhidden = 4\nlayers = 1\nbatch_size = 3\nepochs = 1\n", encoding="utf-8"
        )
        steps = [
            ("synth_db", "--bed", "3x1.8", "--out", tmp_path / "db.csv"),
            ("build_map", "--in", tmp_path / "db.csv", "--bed", "3x1.8",
             "--out", tmp_path / "map.npz"),
            ("gen_traces", "--bed", "3x1.8", "--steps", "60", "--n", "2",
             "--out", tmp_path / "traces.csv"),
            ("make_dataset", "--traces", tmp_path / "traces.csv", "--map", tmp_path / "map.npz",
             "--T", "5", "--out", tmp_path / "ds.npz"),
            ("train_lstm", "--ds", tmp_path / "ds.npz", "--config", run_toml,
             "--out", tmp_path / "model.npz", "--history", tmp_path / "history"),
            ("annotate", "--traces", tmp_path / "traces.csv", "--map", tmp_path / "map.npz",
             "--out", tmp_path / "annotated.csv"),
            ("estimate", "--model", tmp_path / "model.npz", "--geo", tmp_path / "annotated.csv",
             "--out", tmp_path / "path.csv"),
            ("evaluate", "--pred", tmp_path / "path.csv", "--truth", tmp_path / "annotated.csv",
             "--report", tmp_path / "trajectory.json"),
            ("evaluate", "--model", tmp_path / "model.npz", "--ds", tmp_path / "ds.npz",
             "--history", tmp_path / "history.csv", "--report", tmp_path / "heldout.json"),
        ]
        for argv in steps:
            result = run_command(*argv)
            assert result.code == 0, f"{argv[0]}: {result.err}"

        trajectory = json.loads((tmp_path / "trajectory.json").read_text(encoding="utf-8"))
        assert trajectory["n_samples"] == 60
        heldout = json.loads((tmp_path / "heldout.json").read_text(encoding="utf-8"))
        assert len(heldout["per_epoch"]) == 1
        assert heldout["n_samples"] % 5 == 0

    def test_cnn_chain(self, run_command, tmp_path):
        """Test survey to reference-point report."""
        run_toml = tmp_path / "run.toml"
        run_toml.write_text(
            "[cnn]\nchannels = [2, 2, 2, 2]\ndense_units = 8\nepochs = 1\n", encoding="utf-8"
        )
        steps = [
            ("synth_db", "--bed", "3x1.8", "--out", tmp_path / "db.csv"),
            ("render_images", "--in", tmp_path / "db.csv", "--out", tmp_path / "images.npz"),
            ("train_cnn", "--images", tmp_path / "images.npz", "--config", run_toml,
             "--out", tmp_path / "cnn.npz"),
            ("evaluate", "--model", tmp_path / "cnn.npz", "--images", tmp_path / "images.npz",
             "--report", tmp_path / "report.json"),
        ]
        for argv in steps:
            result = run_command(*argv)
            assert result.code == 0, f"{argv[0]}: {result.err}"

        report = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
        assert report["n_samples"] == 96 - 72
