"""Losses returning (value, gradient w.r.t. the prediction)."""

import numpy as np
from scipy.special import log_softmax

from apps.core.exceptions import ShapeError

from .params import Tensor


def softmax(logits: Tensor) -> Tensor:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits: Tensor, labels: Tensor) -> tuple[float, Tensor]:
    """Mean cross-entropy over the batch of (batch, classes) logits and int labels."""
    labels = np.asarray(labels, dtype=np.int64)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise ShapeError(f"logits {logits.shape} and labels {labels.shape} do not match")
    batch = logits.shape[0]
    log_p = log_softmax(logits, axis=1)
    loss = -float(log_p[np.arange(batch), labels].mean())
    grad = np.exp(log_p)
    grad[np.arange(batch), labels] -= 1.0
    return loss, grad / batch


def mse(pred: Tensor, target: Tensor) -> tuple[float, Tensor]:
    """Mean squared error over every element (batch, time steps and features)."""
    if pred.shape != target.shape:
        raise ShapeError(f"prediction {pred.shape} and target {target.shape} differ")
    diff = pred - target
    return float(np.mean(diff * diff)), 2.0 * diff / diff.size
