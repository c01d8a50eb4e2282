"""Tests for pipelines app."""

from dataclasses import replace

import numpy as np
import pandas as pd
import pytest

from apps.core.exceptions import ConfigError, DataError, NumericalError, ShapeError
from apps.datasets.sequences import AnnotatedTrace, annotate, normalize, sliding_window
from apps.datasets.storage import save_dataset, write_annotated
from apps.fingerprints.synthetic import linear_field, synthesize_database
from apps.geomap.maps import build_geomap
from apps.geomap.schemas import TestBed
from apps.mobility.schemas import RwpConfig
from apps.mobility.waypoint import rwp_generate
from apps.neural.checkpoint import load_model
from apps.neural.models import LstmRegressor
from apps.pipelines.cnn import class_errors_m, evaluate_cnn, split_samples, train_cnn
from apps.pipelines.lstm import (
    estimate_trajectory,
    evaluate_lstm,
    lane_batches,
    predict_windows,
    train_lstm,
)
from apps.pipelines.schemas import (
    CnnPipelineConfig,
    LstmPipelineConfig,
    SplitMode,
    load_config,
)
from apps.pipelines.sweep import sweep_hidden
from apps.rss_image.layout import ApLayout
from apps.rss_image.storage import save_images


TIME_STEPS = 5


@pytest.fixture
def walk(rng):
    """An 80-step random walk and the linear field along it."""
    steps = np.cumsum(rng.normal(scale=0.2, size=(80, 2)), axis=0)
    positions = steps - steps.min(axis=0)
    return positions, linear_field(positions)


@pytest.fixture
def splits(walk):
    positions, field = walk
    return normalize(sliding_window(field, positions, TIME_STEPS), 0.75)


@pytest.fixture
def tiny_cfg():
    return LstmPipelineConfig(
        time_steps=TIME_STEPS, hidden=4, layers=1, batch_size=3, epochs=2, seed=0
    )


def pattern_images(rng, per_class, classes=3, side=12):
    """Noisy images with a bright vertical stripe whose position is the class."""
    labels = np.repeat(np.arange(classes), per_class)
    images = rng.uniform(0.0, 0.1, size=(len(labels), side, side))
    width = side // classes
    for k, label in enumerate(labels):
        images[k, :, label * width : (label + 1) * width] += 0.9
    points = np.column_stack([np.arange(classes), np.zeros(classes, dtype=np.int64)])
    return images, labels, points


@pytest.fixture
def cnn_cfg():
    return CnnPipelineConfig(
        channels=(4, 4, 4, 4),
        dense_units=16,
        dropout=(0.0, 0.0),
        epochs=2,
        batch_size=8,
        lr=0.01,
        seed=0,
    )


class TestConfig:
    """Tests for run configurations."""

    def test_defaults(self):
        """Test the documented defaults."""
        cfg = LstmPipelineConfig()
        assert (cfg.time_steps, cfg.hidden, cfg.batch_size, cfg.epochs) == (30, 128, 5, 100)
        assert (cfg.dropout, cfg.split, cfg.lr) == (0.2, 0.75, 0.001)

    def test_precedence(self, tmp_path):
        """Test defaults, then the TOML table, then non-None overrides."""
        path = tmp_path / "run.toml"
        path.write_text("[lstm]\nhidden = 16\nepochs = 3\n", encoding="utf-8")
        cfg = load_config(
            LstmPipelineConfig, "lstm", path, defaults={"time_steps": 7, "hidden": 8},
            epochs=5, lr=None,
        )
        assert (cfg.time_steps, cfg.hidden, cfg.epochs, cfg.lr) == (7, 16, 5, 0.001)

    def test_missing_table(self, tmp_path):
        """Test a file without the table gives the defaults."""
        path = tmp_path / "run.toml"
        path.write_text("[cnn]\nkernel = 5\n", encoding="utf-8")
        assert load_config(LstmPipelineConfig, "lstm", path) == LstmPipelineConfig()
        assert load_config(CnnPipelineConfig, "cnn", path).kernel == 5

    def test_unknown_key(self, tmp_path):
        """Test unknown keys are refused."""
        path = tmp_path / "run.toml"
        path.write_text("[lstm]\nhiden = 16\n", encoding="utf-8")
        with pytest.raises(ConfigError):
            load_config(LstmPipelineConfig, "lstm", path)

    @pytest.mark.parametrize(
        "overrides",
        [{"channels": (8, 16, 32)}, {"kernel": 4}, {"dropout": (0.25, 1.0)}, {"split": 1.0}],
    )
    def test_invalid_cnn(self, overrides):
        """Test CNN settings outside their ranges."""
        with pytest.raises(ConfigError):
            load_config(CnnPipelineConfig, "cnn", **overrides)


class TestLanes:
    """Tests for stateful batch lanes."""

    def test_example(self):
        """Test ten windows in two lanes."""
        assert lane_batches(10, 2).tolist() == [[0, 5], [1, 6], [2, 7], [3, 8], [4, 9]]

    def test_leftover_dropped(self):
        """Test windows beyond an equal split are left out."""
        batches = lane_batches(11, 3)
        assert batches.shape == (3, 3)
        assert batches.max() == 8

    def test_too_few_windows(self):
        """Test fewer windows than lanes."""
        with pytest.raises(DataError):
            lane_batches(2, 3)


class TestLstmPipeline:
    """Tests for LSTM training, evaluation and estimation."""

    def test_zero_epochs(self, tiny_cfg, splits):
        """Test no training gives an empty history."""
        model, history = train_lstm(tiny_cfg.model_copy(update={"epochs": 0}), *splits)
        assert history == []
        assert isinstance(model, LstmRegressor)

    def test_history(self, tiny_cfg, splits):
        """Test one record per epoch with sane values."""
        model, history = train_lstm(tiny_cfg, *splits)
        assert [r.epoch for r in history] == [1, 2]
        for record in history:
            assert np.isfinite(record.train_loss) and np.isfinite(record.test_loss)
            assert 0.0 <= record.accuracy <= 1.0
            assert 0.0 <= record.train_accuracy <= 1.0
        report = evaluate_lstm(model, splits[1])
        assert history[-1].test_mean_err_m == pytest.approx(report.mean_err_m)

    def test_deterministic(self, tiny_cfg, splits):
        """Test equal seeds give equal histories and weights."""
        first, first_history = train_lstm(tiny_cfg, *splits)
        second, second_history = train_lstm(tiny_cfg, *splits)
        assert [r.model_dump() for r in first_history] == [r.model_dump() for r in second_history]
        for name in first.store.names():
            assert np.array_equal(first.store[name].value, second.store[name].value)

    def test_loss_decreases(self, tiny_cfg, splits):
        """Test training lowers the loss on a learnable field."""
        _, history = train_lstm(
            tiny_cfg.model_copy(update={"epochs": 15, "lr": 0.01, "hidden": 8}), *splits
        )
        assert history[-1].train_loss < history[0].train_loss

    def test_non_finite_loss(self, tiny_cfg, splits):
        """Test a NaN sample aborts training naming epoch and step."""
        train, test = splits
        inputs = train.inputs.copy()
        inputs[0, 0, 0] = np.nan
        with pytest.raises(NumericalError) as exc_info:
            train_lstm(tiny_cfg, replace(train, inputs=inputs), test)
        assert exc_info.value.details == {"epoch": 1, "step": 0}

    def test_time_steps_mismatch(self, tiny_cfg, splits):
        """Test the config must match the dataset windows."""
        with pytest.raises(ConfigError):
            train_lstm(tiny_cfg.model_copy(update={"time_steps": 6}), *splits)

    def test_evaluation_counts_every_step(self, tiny_cfg, splits):
        """Test errors cover every step of every held-out window."""
        model, _ = train_lstm(tiny_cfg.model_copy(update={"epochs": 0}), *splits)
        report = evaluate_lstm(model, splits[1])
        assert report.n_samples == splits[1].samples * TIME_STEPS

    def test_estimate_averages_windows(self, tiny_cfg, splits, walk):
        """Test each step is the mean over the windows covering it."""
        train, _ = splits
        model, _ = train_lstm(tiny_cfg.model_copy(update={"epochs": 1}), *splits)
        geo = walk[1][:12]
        scaled = train.norm.inputs.transform(geo)
        windows = len(geo) - TIME_STEPS + 1
        pred = np.stack(
            [model.predict(scaled[w : w + TIME_STEPS][None])[0] for w in range(windows)]
        )
        expected = np.empty((len(geo), 2))
        for step in range(len(geo)):
            covering = range(max(0, step - TIME_STEPS + 1), min(step, windows - 1) + 1)
            expected[step] = np.mean([pred[w, step - w] for w in covering], axis=0)
        positions = estimate_trajectory(model, train.norm, geo, TIME_STEPS)
        assert np.allclose(positions, train.norm.targets.inverse(expected), atol=1e-9)

    def test_estimate_constant_field(self, tiny_cfg, splits):
        """Test a constant field gives one position on all fully covered steps."""
        train, _ = splits
        model, _ = train_lstm(tiny_cfg.model_copy(update={"epochs": 1}), *splits)
        geo = np.tile([1.0, 2.0, 3.0], (20, 1))
        positions = estimate_trajectory(model, train.norm, geo, TIME_STEPS)
        interior = positions[TIME_STEPS - 1 : 20 - TIME_STEPS + 1]
        assert np.allclose(interior, interior[0], atol=1e-9)

    def test_estimate_short_sequence(self, tiny_cfg, splits, walk):
        """Test a sequence shorter than one window."""
        model, _ = train_lstm(tiny_cfg.model_copy(update={"epochs": 0}), *splits)
        with pytest.raises(DataError):
            estimate_trajectory(model, splits[0].norm, walk[1][: TIME_STEPS - 1], TIME_STEPS)
        with pytest.raises(ShapeError):
            estimate_trajectory(model, splits[0].norm, walk[0], TIME_STEPS)

    def test_predict_chunks(self, tiny_cfg, splits):
        """Test chunked prediction matches one pass."""
        model, _ = train_lstm(tiny_cfg.model_copy(update={"epochs": 0}), *splits)
        inputs = np.concatenate([splits[0].inputs] * 6)
        assert np.allclose(predict_windows(model, inputs), model.predict(inputs), atol=1e-12)


class TestSweep:
    """Tests for the hidden-node study."""

    def test_reports(self, tiny_cfg, splits):
        """Test one report per hidden size and seed, each with its history."""
        reports = sweep_hidden(tiny_cfg.model_copy(update={"epochs": 1}), *splits, [2, 3], [0, 1])
        assert list(reports) == [2, 3]
        assert all(list(runs) == [0, 1] for runs in reports.values())
        assert len(reports[3][1].per_epoch) == 1

    def test_empty(self, tiny_cfg, splits):
        """Test an empty list of sizes or seeds."""
        with pytest.raises(ConfigError):
            sweep_hidden(tiny_cfg, *splits, [], [0])


class TestCnnPipeline:
    """Tests for RSS-image classification."""

    def test_split_modes(self, cnn_cfg):
        """Test both split modes partition the samples."""
        train, test = split_samples(20, cnn_cfg)
        assert len(train) == 15 and len(test) == 5
        assert np.array_equal(np.sort(np.r_[train, test]), np.arange(20))
        assert np.array_equal(split_samples(20, cnn_cfg)[0], train)
        chronological = cnn_cfg.model_copy(update={"split_mode": SplitMode.CHRONOLOGICAL})
        assert split_samples(20, chronological)[0].tolist() == list(range(15))

    def test_class_errors(self):
        """Test errors are grid distances scaled to metres."""
        points = np.array([[0, 0], [3, 4]])
        errors = class_errors_m(np.array([1, 0]), np.array([0, 0]), points, 0.6)
        assert errors.tolist() == pytest.approx([3.0, 0.0])

    def test_learns_separable_patterns(self, rng, cnn_cfg):
        """Test stripe patterns are learned."""
        images, labels, points = pattern_images(rng, per_class=20)
        cfg = cnn_cfg.model_copy(update={"epochs": 50})
        model, history = train_cnn(cfg, images, labels, points)
        assert history[-1].train_accuracy > 0.95
        report = evaluate_cnn(model, images, labels, points, 0.6)
        assert report.n_samples == 60

    def test_random_labels_near_chance(self, rng, cnn_cfg):
        """Test noise with shuffled labels does not generalize."""
        images = rng.uniform(size=(160, 12, 12))
        labels = rng.permutation(np.repeat(np.arange(4), 40))
        points = np.column_stack([np.arange(4), np.zeros(4, dtype=np.int64)])
        _, history = train_cnn(cnn_cfg.model_copy(update={"epochs": 3}), images, labels, points)
        assert history[-1].accuracy < 0.6

    def test_deterministic(self, rng, cnn_cfg):
        """Test equal seeds give equal histories."""
        images, labels, points = pattern_images(rng, per_class=6)
        _, first = train_cnn(cnn_cfg, images, labels, points)
        _, second = train_cnn(cnn_cfg, images, labels, points)
        assert [r.model_dump() for r in first] == [r.model_dump() for r in second]

    def test_single_class(self, rng, cnn_cfg):
        """Test one class is not a classification problem."""
        images, labels, points = pattern_images(rng, per_class=6, classes=1)
        with pytest.raises(DataError):
            train_cnn(cnn_cfg, images, labels, points)

    def test_labels_must_index_points(self, rng, cnn_cfg):
        """Test a label without a reference point."""
        images, labels, points = pattern_images(rng, per_class=6)
        with pytest.raises(DataError):
            train_cnn(cnn_cfg, images, labels, points[:2])


class TestCommands:
    """Tests for train-lstm, estimate, sweep and train-cnn subcommands."""

    @pytest.fixture
    def ds_path(self, splits, tmp_path):
        return save_dataset(*splits, tmp_path / "ds.npz", meta={"split": 0.75, "spacing_m": 0.6})

    @pytest.fixture
    def run_toml(self, tmp_path):
        path = tmp_path / "run.toml"
        path.write_text(
            "[lstm]\nhidden = 4\nlayers = 1\nbatch_size = 3\nepochs = 2\n\n"
            "[cnn]\nchannels = [4, 4, 4, 4]\ndense_units = 8\nepochs = 1\n",
            encoding="utf-8",
        )
        return path

    def test_train_lstm(self, run_command, ds_path, run_toml, tmp_path):
        """Test the checkpoint carries normalization and the effective config."""
        out = tmp_path / "model.npz"
        result = run_command(
            "train_lstm", "--ds", ds_path, "--config", run_toml, "--out", out,
            "--history", tmp_path / "history.csv", "--epochs", "1", "--seed", "3",
        )
        assert result.code == 0, result.err
        model, meta = load_model(out)
        assert model.hidden == 4 and model.seed == 3
        assert meta["time_steps"] == TIME_STEPS
        assert meta["train_config"]["epochs"] == 1
        assert len(pd.read_csv(tmp_path / "history.csv")) == 1
        assert (tmp_path / "history.svg").is_file()

    def test_estimate(self, run_command, ds_path, run_toml, walk, tmp_path):
        """Test positions are written for every step of the sequence."""
        model_path = tmp_path / "model.npz"
        run_command("train_lstm", "--ds", ds_path, "--config", run_toml, "--out", model_path)
        positions, field = walk
        trace = AnnotatedTrace(positions=positions, field=field)
        geo = write_annotated([trace], tmp_path / "geo.csv")
        out = tmp_path / "path.csv"
        result = run_command("estimate", "--model", model_path, "--geo", geo, "--out", out)
        assert result.code == 0, result.err
        frame = pd.read_csv(out, float_precision="round_trip")
        assert list(frame.columns) == ["step", "x", "y"]
        assert len(frame) == len(positions)

    def test_sweep(self, run_command, ds_path, run_toml, tmp_path):
        """Test one box per run."""
        result = run_command(
            "sweep", "--ds", ds_path, "--config", run_toml, "--hidden", "2", "3",
            "--seeds", "0", "1", "--epochs", "1", "--out", tmp_path / "sweep",
        )
        assert result.code == 0, result.err
        boxes = pd.read_csv(tmp_path / "sweep.csv")
        assert boxes["label"].tolist() == ["h2/s0", "h2/s1", "h3/s0", "h3/s1"]

    def test_train_cnn(self, run_command, rng, run_toml, tmp_path):
        """Test a classifier checkpoint from an image set."""
        images, labels, points = pattern_images(rng, per_class=6, side=23)
        layout = ApLayout(
            side=23, placement=np.zeros((1, 2), dtype=np.int64), ranking=np.zeros(1, dtype=np.int64)
        )
        image_path = save_images(images, labels, points, layout, tmp_path / "images.npz")
        out = tmp_path / "cnn.npz"
        result = run_command(
            "train_cnn", "--images", image_path, "--config", run_toml, "--out", out,
            "--split-mode", "chronological",
        )
        assert result.code == 0, result.err
        model, meta = load_model(out)
        assert model.classes == 3
        assert meta["train_config"]["split_mode"] == "chronological"


@pytest.mark.slow
class TestAcceptance:
    """Long runs on the full 30 m x 7.2 m bed."""

    @pytest.fixture(scope="class")
    def bed_splits(self):
        bed = TestBed.parse("30x7.2")
        geomap = build_geomap(synthesize_database(bed, field=linear_field, seed=0), bed)
        trace = rwp_generate(RwpConfig(bed=bed, n_steps=20_000, seed=7))
        annotated = annotate(trace.positions, geomap)
        return normalize(sliding_window(annotated.field, annotated.positions, 30), 0.75)

    @pytest.fixture(scope="class")
    def sweep_splits(self):
        bed = TestBed.parse("30x7.2")
        geomap = build_geomap(synthesize_database(bed, field=linear_field, seed=0), bed)
        trace = rwp_generate(RwpConfig(bed=bed, n_steps=3000, seed=8))
        annotated = annotate(trace.positions, geomap)
        return normalize(sliding_window(annotated.field, annotated.positions, 30), 0.75)

    def test_linear_field_accuracy(self, bed_splits):
        """Test the mean held-out error stays under a metre with the reference settings."""
        cfg = LstmPipelineConfig(
            time_steps=30, hidden=128, batch_size=5, dropout=0.2, split=0.75, epochs=20
        )
        model, _ = train_lstm(cfg, *bed_splits)
        assert evaluate_lstm(model, bed_splits[1]).mean_err_m < 1.0

    def test_wider_model_wins(self, sweep_splits):
        """Test 512 hidden nodes beat 128 on mean error for most of three seeds."""
        cfg = LstmPipelineConfig(time_steps=30, batch_size=5, dropout=0.2, epochs=5)
        seeds = (1, 2, 3)
        reports = sweep_hidden(cfg, *sweep_splits, [128, 512], seeds)
        wins = sum(reports[512][s].mean_err_m <= reports[128][s].mean_err_m for s in seeds)
        assert wins >= 2
        for by_seed in reports.values():
            for report in by_seed.values():
                # The wider model may still have the larger worst case
                assert np.isfinite(report.max_err_m)
                assert report.max_err_m >= report.p95_whisker[1]
                assert report.max_err_m >= report.mean_err_m
