"""RSS-image reference-point classification."""

import logging
from typing import Optional

import numpy as np

from apps.core.exceptions import DataError, NumericalError, ShapeError
from apps.core.rng import STREAM_DROPOUT, STREAM_SHUFFLE, make_rng
from apps.datasets.sequences import split_index
from apps.metrics.stats import EpochRecord, EvalReport, summarize_errors
from apps.neural.losses import softmax_cross_entropy
from apps.neural.models import CnnClassifier
from apps.neural.optim import AdamState, adam_step

from .schemas import CnnPipelineConfig, SplitMode

logger = logging.getLogger(__name__)

INFERENCE_CHUNK = 512


def split_samples(samples: int, cfg: CnnPipelineConfig) -> tuple[np.ndarray, np.ndarray]:
    """Sorted (train, test) sample indices; the random mode is seeded by ``cfg.seed``."""
    n_train = split_index(samples, cfg.split)
    if cfg.split_mode == SplitMode.CHRONOLOGICAL:
        order = np.arange(samples)
    else:
        order = make_rng(cfg.seed, STREAM_SHUFFLE).permutation(samples)
    return np.sort(order[:n_train]), np.sort(order[n_train:])


def predict_logits(model: CnnClassifier, images: np.ndarray) -> np.ndarray:
    return np.concatenate(
        [
            model.logits(images[start : start + INFERENCE_CHUNK])
            for start in range(0, len(images), INFERENCE_CHUNK)
        ]
    )


def class_errors_m(
    predicted: np.ndarray, labels: np.ndarray, points: np.ndarray, spacing_m: float
) -> np.ndarray:
    """Distance in metres between the predicted and true reference points."""
    diff = (points[predicted] - points[labels]).astype(np.float64) * spacing_m
    return np.hypot(diff[:, 0], diff[:, 1])


def _check_inputs(images: np.ndarray, labels: np.ndarray, points: np.ndarray) -> int:
    if images.ndim != 3 or images.shape[1] != images.shape[2]:
        raise ShapeError(f"expected (N, side, side) images, got {images.shape}")
    if labels.shape != (len(images),):
        raise ShapeError(f"{len(images)} images but labels of shape {labels.shape}")
    if points.ndim != 2 or points.shape[1] != 2:
        raise ShapeError(f"reference points must be (classes, 2), got {points.shape}")
    if len(labels) and (labels.min() < 0 or labels.max() >= len(points)):
        raise DataError(f"labels must index the {len(points)} reference points")
    distinct = len(np.unique(labels))
    if distinct < 2:
        raise DataError(f"classification needs at least 2 classes, got {distinct}")
    return len(points)


def train_cnn(
    cfg: CnnPipelineConfig,
    images: np.ndarray,
    labels: np.ndarray,
    points: np.ndarray,
) -> tuple[CnnClassifier, list[EpochRecord]]:
    """
    Fit a fresh :class:`CnnClassifier` with softmax cross-entropy and Adam.

    ``labels[i]`` indexes ``points`` (grid indices of each reference point).
    The held-out split follows ``cfg.split_mode``; training order is
    reshuffled every epoch.
    """
    images = np.asarray(images, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    points = np.asarray(points)
    classes = _check_inputs(images, labels, points)

    model = CnnClassifier(
        classes=classes,
        image_side=images.shape[1],
        channels=cfg.channels,
        kernel=cfg.kernel,
        dense_units=cfg.dense_units,
        dropout=cfg.dropout,
        seed=cfg.seed,
    )
    adam = AdamState(lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps)
    dropout_rng = make_rng(cfg.seed, STREAM_DROPOUT)
    order_rng = make_rng(cfg.seed, STREAM_SHUFFLE, 1)
    train_idx, test_idx = split_samples(len(images), cfg)
    history: list[EpochRecord] = []

    for epoch in range(1, cfg.epochs + 1):
        order = order_rng.permutation(train_idx)
        losses = []
        for step, start in enumerate(range(0, len(order), cfg.batch_size)):
            batch = order[start : start + cfg.batch_size]
            model.store.zero_grad()
            logits, cache = model.forward(images[batch], training=True, rng=dropout_rng)
            loss, dlogits = softmax_cross_entropy(logits, labels[batch])
            if not np.isfinite(loss):
                raise NumericalError(
                    f"training loss became non-finite at epoch {epoch}, step {step}",
                    details={"epoch": epoch, "step": step},
                )
            model.backward(cache, dlogits)
            adam_step(model.store, adam)
            losses.append(loss)

        train_pred = predict_logits(model, images[train_idx]).argmax(axis=1)
        test_logits = predict_logits(model, images[test_idx])
        test_loss, _ = softmax_cross_entropy(test_logits, labels[test_idx])
        test_pred = test_logits.argmax(axis=1)
        record = EpochRecord(
            epoch=epoch,
            train_loss=float(np.mean(losses)),
            test_loss=test_loss,
            accuracy=float((test_pred == labels[test_idx]).mean()),
            train_accuracy=float((train_pred == labels[train_idx]).mean()),
            test_mean_err_m=float(
                class_errors_m(test_pred, labels[test_idx], points, cfg.spacing_m).mean()
            ),
        )
        history.append(record)
        logger.info("CNN epoch %d/%d", epoch, cfg.epochs, extra={"extra": record.model_dump()})
    return model, history


def evaluate_cnn(
    model: CnnClassifier,
    images: np.ndarray,
    labels: np.ndarray,
    points: np.ndarray,
    spacing_m: float,
    per_epoch: Optional[list[EpochRecord]] = None,
) -> EvalReport:
    """Localization error of the predicted reference point, in metres."""
    if len(images) == 0:
        raise DataError("no images to evaluate")
    predicted = predict_logits(model, np.asarray(images, dtype=np.float64)).argmax(axis=1)
    errors = class_errors_m(predicted, np.asarray(labels), np.asarray(points), spacing_m)
    return summarize_errors(errors, per_epoch=per_epoch)
