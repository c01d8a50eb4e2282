"""Tests for datasets app."""

import numpy as np
import pandas as pd
import pytest

from apps.core.exceptions import ConfigError, DataError, DomainError, ShapeError
from apps.datasets.sequences import (
    AnnotatedTrace,
    MinMax,
    Normalization,
    SequenceDataset,
    annotate,
    normalize,
    sliding_window,
    split_index,
    windows_from_traces,
)
from apps.datasets.storage import (
    load_dataset,
    read_geo_sequence,
    save_dataset,
    write_annotated,
)


def ramp(n, features):
    return np.arange(n * features, dtype=float).reshape(n, features)


class TestSlidingWindow:
    """Tests for window extraction."""

    def test_window_count_law(self, rng):
        """Test N - T + 1 windows for stride 1 over random (N, T)."""
        for _ in range(50):
            n = int(rng.integers(1, 200))
            t = int(rng.integers(1, n + 1))
            ds = sliding_window(ramp(n, 3), ramp(n, 2), t)
            assert ds.samples == n - t + 1
            assert ds.inputs.shape == (n - t + 1, t, 3)

    def test_window_contents(self):
        """Test window i holds steps i .. i + T - 1."""
        inputs, targets = ramp(10, 3), ramp(10, 2)
        ds = sliding_window(inputs, targets, 4)
        assert np.array_equal(ds.inputs[3], inputs[3:7])
        assert np.array_equal(ds.targets[6], targets[6:10])

    def test_stride(self):
        """Test strided windows."""
        ds = sliding_window(ramp(10, 3), ramp(10, 2), 4, stride=3)
        assert ds.samples == 3
        assert np.array_equal(ds.inputs[1, 0], ramp(10, 3)[3])

    def test_exact_length(self):
        """Test a series of exactly T steps is one window."""
        assert sliding_window(ramp(5, 3), ramp(5, 2), 5).samples == 1

    def test_too_short(self):
        """Test a series shorter than T."""
        with pytest.raises(DataError):
            sliding_window(ramp(4, 3), ramp(4, 2), 5)

    def test_length_mismatch(self):
        """Test inputs and targets must align."""
        with pytest.raises(ShapeError):
            sliding_window(ramp(5, 3), ramp(6, 2), 2)

    def test_bad_window(self):
        """Test T and stride must be positive."""
        with pytest.raises(ConfigError):
            sliding_window(ramp(5, 3), ramp(5, 2), 0)

    def test_traces_never_straddle(self):
        """Test windows of two traces are concatenated without crossing."""
        a = AnnotatedTrace(positions=ramp(6, 2), field=ramp(6, 3))
        b = AnnotatedTrace(positions=ramp(5, 2) + 100, field=ramp(5, 3) + 100)
        ds = windows_from_traces([a, b], 3)
        assert ds.samples == 4 + 3
        assert np.array_equal(ds.inputs[4], b.field[:3])


class TestNormalization:
    """Tests for min-max scaling and the chronological split."""

    def test_split_index(self):
        """Test the split rounds samples * ratio."""
        assert split_index(100, 0.75) == 75
        with pytest.raises(DataError):
            split_index(1, 0.75)
        with pytest.raises(ConfigError):
            split_index(10, 1.0)

    def test_train_scaled_to_unit_range(self, rng):
        """Test train splits span [0, 1] and test uses the train scale."""
        ds = sliding_window(rng.normal(size=(100, 3)), rng.normal(size=(100, 2)), 5)
        train, test = normalize(ds, 0.75)
        assert train.samples == 72 and test.samples == 24
        assert train.inputs.min() == pytest.approx(0.0)
        assert train.inputs.max() == pytest.approx(1.0)
        assert np.allclose(test.norm.inputs.inverse(test.inputs), ds.inputs[72:])

    def test_inverse_round_trip(self, rng):
        """Test targets in metres are recovered."""
        ds = sliding_window(rng.normal(size=(40, 3)), rng.uniform(0, 30, size=(40, 2)), 5)
        train, _ = normalize(ds, 0.5)
        assert np.allclose(train.targets_m(), ds.targets[: train.samples])

    def test_degenerate_feature(self):
        """Test a constant feature maps to 0 and back to its value."""
        scale = MinMax.fit(np.array([[1.0, 5.0], [2.0, 5.0]]))
        assert np.array_equal(scale.degenerate, [False, True])
        scaled = scale.transform(np.array([[1.5, 5.0]]))
        assert np.array_equal(scaled, [[0.5, 0.0]])
        assert np.array_equal(scale.inverse(scaled), [[1.5, 5.0]])

    def test_dict_round_trip(self, rng):
        """Test the JSON form restores identical arrays."""
        norm = Normalization(
            MinMax.fit(rng.normal(size=(9, 3))), MinMax.fit(rng.normal(size=(9, 2)))
        )
        restored = Normalization.from_dict(norm.to_dict())
        assert np.array_equal(restored.inputs.low, norm.inputs.low)
        assert np.array_equal(restored.targets.high, norm.targets.high)

    def test_shape_check(self):
        """Test inputs and targets must agree on samples and steps."""
        with pytest.raises(ShapeError):
            SequenceDataset(np.zeros((2, 3, 3)), np.zeros((2, 4, 2)))


class TestAnnotate:
    """Tests for sampling the map along traces."""

    def test_field_along_trace(self, linear_map):
        """Test the linear field is read back at trace positions."""
        positions = np.array([[0.1, 0.2], [1.5, 1.0], [2.9, 1.7]])
        trace = annotate(positions, linear_map)
        x, y = positions[:, 0], positions[:, 1]
        assert np.allclose(trace.field, np.column_stack([x, y, x + y]), atol=1e-9)

    def test_out_of_bed_step(self, linear_map):
        """Test the offending step is reported."""
        with pytest.raises(DomainError) as exc_info:
            annotate(np.array([[0.1, 0.2], [0.2, 0.2], [5.0, 0.2]]), linear_map)
        assert exc_info.value.details["step"] == 2


class TestDatasetFiles:
    """Tests for dataset and annotated-trace files."""

    def test_round_trip(self, rng, tmp_path):
        """Test splits and normalization survive exactly."""
        ds = sliding_window(rng.normal(size=(30, 3)), rng.normal(size=(30, 2)), 4)
        train, test = normalize(ds, 0.75)
        loaded_train, loaded_test, header = load_dataset(
            save_dataset(train, test, tmp_path / "ds.npz", meta={"stride": 1})
        )
        assert np.array_equal(loaded_train.inputs, train.inputs)
        assert np.array_equal(loaded_test.targets, test.targets)
        assert np.array_equal(loaded_test.norm.targets.low, train.norm.targets.low)
        assert header["time_steps"] == 4
        assert header["stride"] == 1

    def test_geo_sequence(self, tmp_path):
        """Test the field of one trace is read in step order."""
        traces = [
            AnnotatedTrace(positions=ramp(3, 2), field=ramp(3, 3)),
            AnnotatedTrace(positions=ramp(4, 2), field=ramp(4, 3) + 50),
        ]
        path = write_annotated(traces, tmp_path / "annotated.csv")
        assert np.array_equal(read_geo_sequence(path), traces[0].field)
        assert np.array_equal(read_geo_sequence(path, trace_id=1), traces[1].field)

    def test_geo_sequence_full_precision(self, tmp_path):
        """Test field values come back to the same double."""
        field = np.array([[0.12345678901234568, 0.17123646674972612, 1.0 / 3.0]]) * 47.0
        trace = AnnotatedTrace(positions=np.zeros((1, 2)), field=field)
        path = write_annotated([trace], tmp_path / "annotated.csv")
        assert read_geo_sequence(path).tobytes() == field.tobytes()

    def test_geo_sequence_plain(self, tmp_path):
        """Test a file with only the field columns."""
        path = tmp_path / "seq.csv"
        pd.DataFrame({"geo_x": [1.0, 2.0], "geo_y": [3.0, 4.0], "geo_z": [5.0, 6.0]}).to_csv(
            path, index=False
        )
        assert read_geo_sequence(path).shape == (2, 3)


class TestCommands:
    """Tests for make-dataset and annotate subcommands."""

    @pytest.fixture
    def inputs(self, run_command, db_csv, tmp_path):
        map_path, traces = tmp_path / "map.npz", tmp_path / "traces.csv"
        run_command("build_map", "--in", db_csv, "--bed", "3x1.8", "--out", map_path)
        run_command("gen_traces", "--bed", "3x1.8", "--steps", "120", "--n", "2", "--out", traces)
        return map_path, traces

    def test_make_dataset(self, run_command, inputs, tmp_path):
        """Test the window counts of a two-trace dataset."""
        map_path, traces = inputs
        out = tmp_path / "ds.npz"
        result = run_command(
            "make_dataset", "--traces", traces, "--map", map_path, "--T", "10", "--out", out
        )
        assert result.code == 0
        train, test, header = load_dataset(out)
        assert train.samples + test.samples == 2 * (120 - 10 + 1)
        assert header["spacing_m"] == 0.6

    def test_annotate(self, run_command, inputs, tmp_path):
        """Test the annotated CSV carries the field."""
        map_path, traces = inputs
        out = tmp_path / "annotated.csv"
        result = run_command("annotate", "--traces", traces, "--map", map_path, "--out", out)
        assert result.code == 0
        frame = pd.read_csv(out, float_precision="round_trip")
        assert np.allclose(frame["geo_z"], frame["x"] + frame["y"], atol=1e-9)
