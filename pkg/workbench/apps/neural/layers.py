"""Dense, ReLU and dropout layers."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from apps.core.exceptions import ConfigError, ShapeError

from .params import ParamStore, Tensor, uniform_init


def dense_forward(W: Tensor, b: Tensor, x: Tensor) -> Tensor:
    """Affine map over the last axis: x (..., in) @ W (in, out) + b."""
    if x.shape[-1] != W.shape[0] or b.shape != (W.shape[1],):
        raise ShapeError(f"dense weights {W.shape} do not fit input {x.shape}")
    return x @ W + b


def dense_backward(W: Tensor, x: Tensor, dy: Tensor) -> tuple[Tensor, Tensor, Tensor]:
    """Returns (dW, db, dx); leading axes of x are summed over."""
    x_flat = x.reshape(-1, W.shape[0])
    dy_flat = dy.reshape(-1, W.shape[1])
    return x_flat.T @ dy_flat, dy_flat.sum(axis=0), dy @ W.T


def time_distributed_dense(W: Tensor, b: Tensor, x: Tensor) -> Tensor:
    """Same affine map applied independently at every step of x (batch, T, H)."""
    if x.ndim != 3:
        raise ShapeError(f"time-distributed input must be (batch, T, H), got {x.shape}")
    return dense_forward(W, b, x)


@dataclass
class DenseCache:
    x: Tensor
    names: tuple[str, ...]
    versions: tuple[int, ...]


class Dense:
    """Fully connected layer; applied to (batch, T, H) it is time-distributed."""

    def __init__(
        self,
        store: ParamStore,
        name: str,
        in_features: int,
        out_features: int,
        rng: np.random.Generator,
    ):
        self.store = store
        self.W = store.add(
            f"{name}.W", uniform_init(rng, (in_features, out_features), in_features)
        )
        self.b = store.add(f"{name}.b", np.zeros(out_features))

    @property
    def param_names(self) -> tuple[str, ...]:
        return (self.W.name, self.b.name)

    def forward(self, x: Tensor) -> tuple[Tensor, DenseCache]:
        y = dense_forward(self.W.value, self.b.value, x)
        return y, DenseCache(x, self.param_names, self.store.versions(self.param_names))

    def backward(self, cache: DenseCache, dy: Tensor) -> Tensor:
        self.store.check_versions(cache.names, cache.versions)
        dW, db, dx = dense_backward(self.W.value, cache.x, dy)
        self.W.grad += dW
        self.b.grad += db
        return dx


def relu(x: Tensor) -> Tensor:
    return np.maximum(x, 0.0)


def relu_backward(x: Tensor, dy: Tensor) -> Tensor:
    return dy * (x > 0)


def dropout(
    x: Tensor,
    rate: float,
    training: bool,
    rng: Optional[np.random.Generator] = None,
) -> tuple[Tensor, Optional[Tensor]]:
    """
    Inverted dropout.

    In training, each unit is kept with probability ``1 - rate`` and kept
    units are scaled by ``1 / (1 - rate)``; in inference this is the identity.

    Returns:
        (y, mask) where mask is the scaling applied (None for the identity)
    """
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x, None
    if rng is None:
        raise ConfigError("training-mode dropout needs a random generator")
    keep = 1.0 - rate
    mask = (rng.random(x.shape) < keep) / keep
    return x * mask, mask


def dropout_backward(mask: Optional[Tensor], dy: Tensor) -> Tensor:
    return dy if mask is None else dy * mask
