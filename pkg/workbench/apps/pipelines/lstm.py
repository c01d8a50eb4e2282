"""Trajectory estimation with the stacked LSTM.

Training is stateful. The training windows are cut into ``batch_size``
contiguous lanes of equal length; batch ``k`` holds the ``k``-th window of
every lane, so row ``j`` of consecutive batches walks lane ``j`` in order and
the carried (h, c) follow one stretch of the trace. Windows left over after
the equal split are not trained on. States are reset at every epoch start.

Inference (evaluation and :func:`estimate_trajectory`) runs every window
from a zero state.
"""

import logging
from typing import Optional

import numpy as np

from apps.core.exceptions import ConfigError, DataError, NumericalError, ShapeError
from apps.core.rng import STREAM_DROPOUT, make_rng
from apps.datasets.sequences import Normalization, SequenceDataset, sliding_window
from apps.metrics.stats import EpochRecord, EvalReport, position_errors, summarize_errors
from apps.neural.losses import mse
from apps.neural.models import LstmRegressor
from apps.neural.optim import AdamState, adam_step

from .schemas import LstmPipelineConfig

logger = logging.getLogger(__name__)

INFERENCE_CHUNK = 256


def lane_batches(samples: int, batch_size: int) -> np.ndarray:
    """
    Sample indices per training batch, shape (batches, batch_size).

    ``lane_batches(10, 2)`` -> [[0, 5], [1, 6], [2, 7], [3, 8], [4, 9]]
    """
    lane_length = samples // batch_size
    if lane_length == 0:
        raise DataError(f"{samples} training window(s) cannot fill {batch_size} batch lanes")
    return np.arange(lane_length * batch_size).reshape(batch_size, lane_length).T


def predict_windows(model: LstmRegressor, inputs: np.ndarray) -> np.ndarray:
    """Zero-state predictions for (samples, T, 3) windows, in chunks."""
    if len(inputs) == 0:
        return np.empty((0, inputs.shape[1], model.out_features))
    return np.concatenate(
        [
            model.predict(inputs[start : start + INFERENCE_CHUNK])
            for start in range(0, len(inputs), INFERENCE_CHUNK)
        ]
    )


def _errors_m(norm: Optional[Normalization], pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    if norm is not None:
        pred, target = norm.targets.inverse(pred), norm.targets.inverse(target)
    return position_errors(pred, target)


def evaluate_lstm(
    model: LstmRegressor,
    ds: SequenceDataset,
    per_epoch: Optional[list[EpochRecord]] = None,
) -> EvalReport:
    """Error statistics in metres over every step of every window of ``ds``."""
    if ds.samples == 0:
        raise DataError("no windows to evaluate")
    pred = predict_windows(model, ds.inputs)
    return summarize_errors(_errors_m(ds.norm, pred, ds.targets), per_epoch=per_epoch)


def train_lstm(
    cfg: LstmPipelineConfig,
    train: SequenceDataset,
    test: SequenceDataset,
) -> tuple[LstmRegressor, list[EpochRecord]]:
    """
    Fit a fresh :class:`LstmRegressor` with MSE loss and Adam.

    Accuracy is the fraction of predicted steps within ``cfg.spacing_m`` of
    the truth, measured in metres.

    Raises:
        ConfigError: window length differs from ``cfg.time_steps``
        NumericalError: the loss became non-finite, naming epoch and step
    """
    if train.time_steps != cfg.time_steps:
        raise ConfigError(
            f"dataset windows have {train.time_steps} steps, config expects {cfg.time_steps}"
        )
    if train.inputs.shape[2:] != test.inputs.shape[2:]:
        raise ShapeError(f"train {train.inputs.shape} and test {test.inputs.shape} features differ")

    model = LstmRegressor(
        in_features=train.inputs.shape[2],
        hidden=cfg.hidden,
        layers=cfg.layers,
        out_features=train.targets.shape[2],
        dropout=cfg.dropout,
        seed=cfg.seed,
    )
    adam = AdamState(lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps)
    dropout_rng = make_rng(cfg.seed, STREAM_DROPOUT)
    history: list[EpochRecord] = []
    if cfg.epochs == 0:
        return model, history

    batches = lane_batches(train.samples, cfg.batch_size)
    dropped = train.samples - batches.size
    if dropped:
        logger.debug("%d trailing training window(s) left out of the lanes", dropped)

    for epoch in range(1, cfg.epochs + 1):
        states = model.zero_state(cfg.batch_size)
        losses = []
        hits = 0
        for step, index in enumerate(batches):
            x, y = train.inputs[index], train.targets[index]
            model.store.zero_grad()
            pred, states, cache = model.forward(x, states, training=True, rng=dropout_rng)
            loss, dpred = mse(pred, y)
            if not np.isfinite(loss):
                raise NumericalError(
                    f"training loss became non-finite at epoch {epoch}, step {step}",
                    details={"epoch": epoch, "step": step},
                )
            model.backward(cache, dpred)
            adam_step(model.store, adam)
            losses.append(loss)
            hits += int((_errors_m(train.norm, pred, y) < cfg.spacing_m).sum())

        test_pred = predict_windows(model, test.inputs)
        test_loss, _ = mse(test_pred, test.targets)
        test_errors = _errors_m(test.norm, test_pred, test.targets)
        record = EpochRecord(
            epoch=epoch,
            train_loss=float(np.mean(losses)),
            test_loss=float(test_loss),
            accuracy=float((test_errors < cfg.spacing_m).mean()),
            train_accuracy=hits / (batches.size * cfg.time_steps),
            test_mean_err_m=float(test_errors.mean()),
        )
        history.append(record)
        logger.info(
            "LSTM epoch %d/%d",
            epoch,
            cfg.epochs,
            extra={"extra": record.model_dump()},
        )
    return model, history


def estimate_trajectory(
    model: LstmRegressor,
    norm: Normalization,
    geo: np.ndarray,
    time_steps: int,
) -> np.ndarray:
    """
    Positions (T', 2) in metres for a field sequence (T', 3).

    Every window of ``time_steps`` consecutive samples is predicted; each
    step's position is the mean over the windows covering it.

    Raises:
        DataError: the sequence is shorter than one window
    """
    geo = np.asarray(geo, dtype=np.float64)
    if geo.ndim != 2 or geo.shape[1] != model.in_features:
        raise ShapeError(f"expected a (T', {model.in_features}) field sequence, got {geo.shape}")
    if len(geo) < time_steps:
        raise DataError(f"sequence of {len(geo)} steps is shorter than the window of {time_steps}")

    scaled = norm.inputs.transform(geo)
    windows = sliding_window(scaled, scaled, time_steps).inputs
    pred = predict_windows(model, windows)

    total = np.zeros((len(geo), pred.shape[2]))
    count = np.zeros(len(geo))
    for offset in range(time_steps):
        total[offset : offset + len(windows)] += pred[:, offset, :]
        count[offset : offset + len(windows)] += 1
    return norm.targets.inverse(total / count[:, None])
