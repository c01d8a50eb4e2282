"""Tests for filters app."""

import numpy as np
import pytest

from apps.core.exceptions import ConfigError, DataError, NumericalError
from apps.filters.kalman import KalmanState, filter_groups, filter_series, kalman_step
from apps.fingerprints.parser import parse_database


def textbook_filter(z, q, r):
    """Scalar random-walk Kalman filter written out step by step."""
    x_hat, p = z[0], r
    out = [x_hat]
    for measurement in z[1:]:
        p_minus = p + q
        k = p_minus / (p_minus + r)
        x_hat = x_hat + k * (measurement - x_hat)
        p = (1 - k) * p_minus
        out.append(x_hat)
    return np.array(out)


class TestKalmanStep:
    """Tests for the single-step update."""

    def test_step_moves_towards_measurement(self):
        """Test the estimate moves by the gain times the innovation."""
        state = kalman_step(KalmanState(estimate=0.0, error_cov=1.0, process_noise_q=0.0), 2.0)
        assert state.estimate == pytest.approx(1.0)
        assert state.error_cov == pytest.approx(0.5)

    def test_negative_noise(self):
        """Test negative variances are rejected."""
        with pytest.raises(ConfigError):
            KalmanState(estimate=0.0, error_cov=1.0, process_noise_q=-1.0)

    def test_non_finite_measurement(self):
        """Test NaN measurements are rejected."""
        with pytest.raises(NumericalError):
            kalman_step(KalmanState(estimate=0.0, error_cov=1.0), float("nan"))


class TestFilterSeries:
    """Tests for stream filtering."""

    def test_matches_textbook_on_constant_signal(self, rng):
        """Test 1000 noisy constant samples against the step-by-step recursion."""
        z = 3.0 + rng.normal(0.0, 0.5, 1000)
        out = filter_series(z, q=0.01, r=0.25)[:, 0]
        assert np.max(np.abs(out - textbook_filter(z, 0.01, 0.25))) < 1e-12

    def test_columns_are_independent(self, rng):
        """Test each column is its own filter."""
        z = rng.normal(size=(50, 3))
        out = filter_series(z, q=0.1, r=1.0)
        for k in range(3):
            assert np.allclose(out[:, k], textbook_filter(z[:, k], 0.1, 1.0), atol=1e-12)

    def test_first_output_is_first_sample(self):
        """Test the filter starts at the first measurement."""
        out = filter_series([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
        assert np.array_equal(out[0], [1.0, 2.0, 3.0])

    def test_single_sample(self):
        """Test one sample is returned unchanged."""
        assert np.array_equal(filter_series([[7.0, 8.0, 9.0]]), [[7.0, 8.0, 9.0]])

    def test_zero_noise_is_constant(self):
        """Test R = 0 follows the measurements exactly."""
        z = np.array([1.0, 2.0, 3.0])
        assert np.allclose(filter_series(z, q=0.1, r=0.0)[:, 0], z)

    def test_reduces_noise(self, rng):
        """Test the smoothed stream is closer to the true constant."""
        z = 5.0 + rng.normal(0.0, 1.0, 500)
        out = filter_series(z, q=0.001, r=1.0)[:, 0]
        assert np.std(out[100:] - 5.0) < np.std(z[100:] - 5.0)

    def test_equals_repeated_steps(self, rng):
        """Test each column is kalman_step applied sample by sample."""
        z = rng.normal(size=(40, 3))
        out = filter_series(z, q=0.05, r=0.5)
        for k in range(3):
            state = KalmanState(
                estimate=z[0, k], error_cov=0.5, process_noise_q=0.05, measurement_noise_r=0.5
            )
            expected = [state.estimate]
            for measurement in z[1:, k]:
                state = kalman_step(state, measurement)
                expected.append(state.estimate)
            assert np.array_equal(out[:, k], expected)

    def test_offset_invariance(self, rng):
        """Test shifting the input by a constant shifts the output by it."""
        z = rng.normal(size=(200, 3))
        offset = np.array([-40.0, 12.5, 3.0])
        assert np.allclose(filter_series(z + offset), filter_series(z) + offset, atol=1e-9)

    def test_spike_attenuation(self):
        """Test a single outlier is damped and then decays."""
        z = np.zeros((300, 3))
        z[200] = 10.0
        out = filter_series(z, q=0.01, r=1.0)
        assert np.all(out[200] > 0.0)
        assert np.all(out[200] < 2.0)
        assert np.all(out[260] < out[200] / 10.0)
        assert np.array_equal(out[199], np.zeros(3))

    def test_empty(self):
        """Test an empty series fails."""
        with pytest.raises(DataError):
            filter_series(np.empty((0, 3)))

    def test_nan_reports_step(self):
        """Test a NaN names its step."""
        z = np.ones((5, 3))
        z[3, 1] = np.nan
        with pytest.raises(NumericalError) as exc_info:
            filter_series(z)
        assert exc_info.value.details["step"] == 3


class TestFilterGroups:
    """Tests for grouped filtering."""

    def test_groups_filtered_separately(self, rng):
        """Test interleaved groups equal separate runs."""
        z = rng.normal(size=(10, 3))
        keys = ["a", "b"] * 5
        out = filter_groups(keys, z, q=0.1, r=1.0)
        assert np.array_equal(out[0::2], filter_series(z[0::2], 0.1, 1.0))
        assert np.array_equal(out[1::2], filter_series(z[1::2], 0.1, 1.0))


class TestFilterCommand:
    """Tests for the filter subcommand."""

    def test_filter_keeps_rows(self, run_command, db_csv, tmp_path, linear_db):
        """Test the filtered file keeps order and everything but the field."""
        out = tmp_path / "smooth.csv"
        result = run_command("filter", "--in", db_csv, "--out", out, "--ori")
        assert result.code == 0
        with out.open(newline="") as fh:
            filtered = parse_database(fh)
        assert len(filtered) == len(linear_db)
        for before, after in zip(linear_db.records, filtered.records):
            assert (before.loc_x, before.loc_y, before.rss) == (after.loc_x, after.loc_y, after.rss)
