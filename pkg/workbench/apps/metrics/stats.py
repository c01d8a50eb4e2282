"""Localization error statistics.

Quantiles use the nearest-rank rule on the sorted errors: the p-quantile of
N values is the k-th smallest with k = ceil(p * N), clamped to [1, N]. The
central p band is [q((1 - p) / 2), q((1 + p) / 2)].
"""

import math
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field

from apps.core.exceptions import DataError, ShapeError


class EpochRecord(BaseModel):
    """One row of a training history."""

    epoch: int
    train_loss: float
    test_loss: float
    accuracy: float = Field(..., description="Held-out accuracy")
    train_accuracy: float = 0.0
    test_mean_err_m: float = 0.0


class EvalReport(BaseModel):
    n_samples: int
    mean_err_m: float
    median_err_m: float
    p75_box: tuple[float, float]
    p95_whisker: tuple[float, float]
    max_err_m: float
    p75_mean_err_m: float = Field(..., description="Mean of the errors inside the 75% box")
    per_epoch: list[EpochRecord] = Field(default_factory=list)


def nearest_rank(sorted_values: np.ndarray, p: float) -> float:
    n = len(sorted_values)
    # Round first so p * N landing on an integer is not pushed up by float noise
    k = math.ceil(round(p * n, 9))
    return float(sorted_values[min(max(k, 1), n) - 1])


def central_band(sorted_values: np.ndarray, p: float) -> tuple[float, float]:
    return (
        nearest_rank(sorted_values, (1.0 - p) / 2.0),
        nearest_rank(sorted_values, (1.0 + p) / 2.0),
    )


def position_errors(pred: np.ndarray, truth: np.ndarray) -> np.ndarray:
    """Euclidean error per row of (..., 2) positions, flattened."""
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape or pred.shape[-1] != 2:
        raise ShapeError(f"predictions {pred.shape} and truth {truth.shape} must match as (N, 2)")
    diff = (pred - truth).reshape(-1, 2)
    return np.hypot(diff[:, 0], diff[:, 1])


def summarize_errors(
    errors: np.ndarray, per_epoch: Optional[list[EpochRecord]] = None
) -> EvalReport:
    errors = np.sort(np.asarray(errors, dtype=np.float64).reshape(-1))
    if len(errors) == 0:
        raise DataError("no errors to summarize")
    box = central_band(errors, 0.75)
    inside = errors[(errors >= box[0]) & (errors <= box[1])]
    return EvalReport(
        n_samples=len(errors),
        mean_err_m=float(errors.mean()),
        median_err_m=nearest_rank(errors, 0.5),
        p75_box=box,
        p95_whisker=central_band(errors, 0.95),
        max_err_m=float(errors[-1]),
        p75_mean_err_m=float(inside.mean()),
        per_epoch=per_epoch or [],
    )


def error_stats(pred: np.ndarray, truth: np.ndarray) -> EvalReport:
    """Statistics of the per-step Euclidean error between (N, 2) position arrays."""
    return summarize_errors(position_errors(pred, truth))
