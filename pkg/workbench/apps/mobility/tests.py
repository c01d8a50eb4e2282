"""Tests for mobility app."""

import math

import numpy as np
import pandas as pd
import pytest
from scipy import stats

from apps.core.exceptions import ConfigError, SchemaError
from apps.core.utils import build_config
from apps.geomap.schemas import TestBed
from apps.mobility.schemas import GammaSpeed, RwpConfig, Trace, TraceModel
from apps.mobility.storage import read_traces, write_traces
from apps.mobility.waypoint import (
    boundary_distance,
    gamma_rwp_generate,
    generate_traces,
    rwp_generate,
)

SURVEY_BED = TestBed.parse("30x7.2")


def make_config(**kwargs):
    kwargs.setdefault("bed", SURVEY_BED)
    kwargs.setdefault("n_steps", 100)
    return build_config(RwpConfig, **kwargs)


def in_bed(positions, bed):
    return (
        (positions[:, 0] >= 0.0).all()
        and (positions[:, 0] <= bed.width_m).all()
        and (positions[:, 1] >= 0.0).all()
        and (positions[:, 1] <= bed.height_m).all()
    )


class TestRwpConfig:
    """Tests for mobility parameters."""

    def test_speed_order(self):
        """Test v_min may not exceed v_max."""
        with pytest.raises(ConfigError):
            make_config(v_min=2.0, v_max=1.0)

    def test_positive_steps(self):
        """Test the trace length must be positive."""
        with pytest.raises(ConfigError):
            make_config(n_steps=0)


class TestRandomWaypoint:
    """Tests for the classic random-waypoint generator."""

    def test_length_and_start(self):
        """Test n_steps positions, the first being the start."""
        trace = rwp_generate(make_config(n_steps=500, seed=3))
        assert trace.positions.shape == (500, 2)
        assert trace.model is TraceModel.RWP

    def test_single_step(self):
        """Test a one-step trace is just the start."""
        trace = rwp_generate(make_config(n_steps=1))
        assert trace.positions.shape == (1, 2)
        assert len(trace.waypoints) == 0

    def test_deterministic(self):
        """Test equal seeds give equal traces."""
        a = rwp_generate(make_config(n_steps=300, seed=9))
        b = rwp_generate(make_config(n_steps=300, seed=9))
        assert np.array_equal(a.positions, b.positions)

    def test_seeds_differ(self):
        """Test different seeds give different traces."""
        a = rwp_generate(make_config(seed=1))
        b = rwp_generate(make_config(seed=2))
        assert not np.array_equal(a.positions, b.positions)

    def test_step_length_bounded(self):
        """Test no step is longer than v_max * dt."""
        trace = rwp_generate(make_config(n_steps=2000, seed=5))
        steps = np.hypot(*np.diff(trace.positions, axis=0).T)
        assert steps.max() <= 1.5 + 1e-12

    def test_legs_end_on_waypoints(self):
        """Test every completed leg lands exactly on its waypoint."""
        trace = rwp_generate(make_config(n_steps=1000, seed=6))
        visited = {tuple(p) for p in trace.positions}
        for waypoint in trace.waypoints[:-1]:
            assert tuple(waypoint) in visited

    def test_leg_speeds_in_range(self):
        """Test leg speeds are drawn from [v_min, v_max]."""
        trace = rwp_generate(make_config(n_steps=3000, seed=7))
        assert trace.leg_speeds.min() >= 0.5
        assert trace.leg_speeds.max() <= 1.5

    def test_pauses_repeat_position(self):
        """Test pauses emit the waypoint repeatedly."""
        trace = rwp_generate(make_config(n_steps=1000, max_pause_s=20.0, seed=8))
        repeats = (np.diff(trace.positions, axis=0) == 0.0).all(axis=1)
        assert repeats.any()

    def test_waypoints_uniform(self):
        """Test 10,000 waypoints pass a KS uniformity test per axis."""
        # One-step legs: every step after the start is a new waypoint
        trace = rwp_generate(make_config(n_steps=10_001, step_dt_s=100.0, seed=11))
        assert len(trace.waypoints) == 10_000
        assert stats.kstest(trace.waypoints[:, 0], "uniform", args=(0.0, 30.0)).pvalue > 0.01
        assert stats.kstest(trace.waypoints[:, 1], "uniform", args=(0.0, 7.2)).pvalue > 0.01

    def test_positions_in_bed(self):
        """Test 2,000 traces of 100 steps stay inside the bed."""
        traces = generate_traces(make_config(seed=0), 2000)
        assert all(in_bed(t.positions, SURVEY_BED) for t in traces)

    @pytest.mark.slow
    def test_positions_in_bed_50k(self):
        """Test 50,000 traces of 100 steps stay inside the bed."""
        traces = generate_traces(make_config(seed=0), 50_000)
        assert all(in_bed(t.positions, SURVEY_BED) for t in traces)


class TestGammaWaypoint:
    """Tests for the Gamma-speed variant."""

    def test_speeds_follow_gamma(self):
        """Test leg speeds pass a KS test against Gamma(k, theta)."""
        cfg = make_config(bed=TestBed.parse("1.2x1.2"), n_steps=12_000, step_dt_s=100.0, seed=12)
        trace = gamma_rwp_generate(cfg, 2.0, 0.5)
        assert len(trace.leg_speeds) >= 10_000
        assert stats.kstest(trace.leg_speeds, "gamma", args=(2.0, 0.0, 0.5)).pvalue > 0.01

    def test_mean_speed(self):
        """Test the sample mean is near k * theta."""
        cfg = make_config(bed=TestBed.parse("1.2x1.2"), n_steps=12_000, step_dt_s=100.0, seed=13)
        speeds = gamma_rwp_generate(cfg, 3.0, 0.4).leg_speeds
        assert speeds.mean() == pytest.approx(1.2, rel=0.05)

    def test_first_leg_stays_in_bed(self):
        """Test the heading-based first waypoint lies inside the bed."""
        for seed in range(200):
            trace = gamma_rwp_generate(make_config(n_steps=5, seed=seed), 2.0, 0.5)
            assert in_bed(trace.waypoints[:1], SURVEY_BED)

    def test_invalid_parameters(self):
        """Test non-positive Gamma parameters."""
        with pytest.raises(ConfigError):
            gamma_rwp_generate(make_config(), 0.0, 0.5)

    def test_generate_traces_gamma(self):
        """Test per-trace seeds are seed + index."""
        cfg = make_config(seed=20)
        traces = generate_traces(cfg, 3, model=TraceModel.GAMMA, gamma=GammaSpeed(shape_k=2.0))
        again = gamma_rwp_generate(cfg.model_copy(update={"seed": 22}), 2.0, 0.5)
        assert np.array_equal(traces[2].positions, again.positions)


class TestBoundaryDistance:
    """Tests for the edge distance helper."""

    def test_axis_headings(self):
        """Test distances along the axes from the centre."""
        cfg = make_config()
        centre = np.array([15.0, 3.6])
        assert boundary_distance(cfg, centre, 0.0) == pytest.approx(15.0)
        assert boundary_distance(cfg, centre, math.pi / 2) == pytest.approx(3.6)
        assert boundary_distance(cfg, centre, math.pi) == pytest.approx(15.0)


class TestTraceFiles:
    """Tests for trace CSV files."""

    def test_round_trip(self, tmp_path):
        """Test positions survive the CSV exactly."""
        traces = generate_traces(make_config(n_steps=50, seed=4), 3)
        loaded = read_traces(write_traces(traces, tmp_path / "t.csv"))
        assert len(loaded) == 3
        for trace, positions in zip(traces, loaded):
            assert np.array_equal(trace.positions, positions)

    def test_round_trip_full_precision(self, tmp_path):
        """Test 17-digit values are read back to the same double."""
        positions = np.array([[0.12345678901234568, 0.17123646674972612], [1.0 / 3.0, 2.0 / 3.0]])
        trace = Trace(
            positions=positions,
            seed=0,
            model=TraceModel.RWP,
            waypoints=np.empty((0, 2)),
            leg_speeds=np.empty(0),
        )
        (loaded,) = read_traces(write_traces([trace], tmp_path / "t.csv"))
        assert loaded.tobytes() == positions.tobytes()

    def test_missing_column(self, tmp_path):
        """Test a file without the y column."""
        path = tmp_path / "t.csv"
        pd.DataFrame({"trace_id": [0], "step": [0], "x": [1.0]}).to_csv(path, index=False)
        with pytest.raises(SchemaError):
            read_traces(path)


class TestGenTracesCommand:
    """Tests for the gen-traces subcommand."""

    def test_writes_traces_and_plots(self, run_command, tmp_path):
        """Test CSV output and the optional figures."""
        out = tmp_path / "traces.csv"
        result = run_command(
            "gen_traces", "--model", "gamma", "--bed", "30x7.2", "--steps", "200", "--n", "2",
            "--seed", "5", "--out", out, "--plot-dir", tmp_path / "plots",
        )
        assert result.code == 0
        frame = pd.read_csv(out, float_precision="round_trip")
        assert list(frame.columns) == ["trace_id", "step", "x", "y"]
        assert len(frame) == 400
        for name in ("trace_0.csv", "trace_0.svg", "waypoint_density.csv", "waypoint_density.svg"):
            assert (tmp_path / "plots" / name).is_file()

    def test_same_seed_same_bytes(self, run_command, tmp_path):
        """Test fixed-seed output is byte-identical."""
        for name in ("a.csv", "b.csv"):
            run_command(
                "gen_traces", "--bed", "3x1.8", "--steps", "100", "--seed", "8",
                "--out", tmp_path / name,
            )
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
