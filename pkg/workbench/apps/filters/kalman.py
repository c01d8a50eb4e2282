"""Scalar Kalman smoothing of field and orientation streams.

Random-walk state model x[k+1] = x[k] + w, measured directly. Each of the
three components runs its own independent scalar filter.
"""

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from apps.core.exceptions import ConfigError, DataError, NumericalError, ShapeError

logger = logging.getLogger(__name__)

DEFAULT_Q = 0.01
DEFAULT_R = 1.0


@dataclass(frozen=True)
class KalmanState:
    estimate: float
    error_cov: float
    process_noise_q: float = DEFAULT_Q
    measurement_noise_r: float = DEFAULT_R

    def __post_init__(self):
        if self.process_noise_q < 0 or self.measurement_noise_r < 0:
            raise ConfigError(
                f"noise variances must be >= 0, got q={self.process_noise_q}, "
                f"r={self.measurement_noise_r}"
            )
        if self.error_cov < 0:
            raise ConfigError(f"error covariance must be >= 0, got {self.error_cov}")


def gain(prior_cov: float, r: float) -> float:
    total = prior_cov + r
    return prior_cov / total if total > 0 else 0.0


def kalman_step(state: KalmanState, measurement: float) -> KalmanState:
    """One predict-update cycle: P += Q; K = P/(P+R); x += K(z-x); P = (1-K)P."""
    if not math.isfinite(measurement):
        raise NumericalError(f"non-finite measurement {measurement}")
    prior = state.error_cov + state.process_noise_q
    k = gain(prior, state.measurement_noise_r)
    return replace(
        state,
        estimate=state.estimate + k * (measurement - state.estimate),
        error_cov=(1.0 - k) * prior,
    )


def filter_series(
    series: Sequence[Sequence[float]] | np.ndarray,
    q: float = DEFAULT_Q,
    r: float = DEFAULT_R,
) -> np.ndarray:
    """
    Smooth an (N, 3) stream, one independent filter per column.

    The filters start at the first sample with P0 = R, so the first output
    equals the first input.

    Raises:
        DataError: empty series
        ConfigError: negative q or r
        NumericalError: a non-finite sample (reported with its index)
    """
    z = np.asarray(series, dtype=np.float64)
    if z.ndim == 1:
        z = z[:, None]
    if z.ndim != 2:
        raise ShapeError(f"series must be (N, C), got shape {z.shape}")
    if len(z) == 0:
        raise DataError("cannot filter an empty series")
    bad = ~np.isfinite(z).all(axis=1)
    if bad.any():
        index = int(np.argmax(bad))
        raise NumericalError(
            f"non-finite measurement at step {index}", details={"step": index}
        )

    states = [
        KalmanState(estimate=float(x0), error_cov=r, process_noise_q=q, measurement_noise_r=r)
        for x0 in z[0]
    ]
    out = np.empty_like(z)
    out[0] = z[0]
    for step in range(1, len(z)):
        states = [kalman_step(state, float(m)) for state, m in zip(states, z[step])]
        out[step] = [state.estimate for state in states]
    return out


def filter_groups(keys: Sequence[tuple], series: np.ndarray, q: float, r: float) -> np.ndarray:
    """
    Filter rows sharing a key as one stream each, keeping the original row order.

    Args:
        keys: one hashable group key per row
        series: (N, C) samples
    """
    series = np.asarray(series, dtype=np.float64)
    groups: dict[tuple, list[int]] = defaultdict(list)
    for row, key in enumerate(keys):
        groups[key].append(row)

    out = np.empty_like(series)
    for key, rows in groups.items():
        out[rows] = filter_series(series[rows], q=q, r=r)
    logger.debug("Filtered %d group(s) over %d rows", len(groups), len(series))
    return out
