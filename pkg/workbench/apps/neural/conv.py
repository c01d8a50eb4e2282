"""Valid 2-D convolution and 2x2 max pooling on channels-last images.

Images are (batch, height, width, channels); kernels are
(kh, kw, in_channels, out_channels).
"""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from apps.core.exceptions import ShapeError

from .params import ParamStore, Tensor, uniform_init


def conv2d_forward(x: Tensor, K: Tensor, b: Tensor) -> Tensor:
    """y[n, p, q, o] = sum_{i, j, c} x[n, p + i, q + j, c] K[i, j, c, o] + b[o]."""
    if x.ndim != 4 or K.ndim != 4 or x.shape[3] != K.shape[2] or b.shape != (K.shape[3],):
        raise ShapeError(f"conv kernel {K.shape} does not fit input {x.shape}")
    kh, kw = K.shape[:2]
    if x.shape[1] < kh or x.shape[2] < kw:
        raise ShapeError(f"input {x.shape[1:3]} smaller than kernel {(kh, kw)}")
    windows = sliding_window_view(x, (kh, kw), axis=(1, 2))
    return np.einsum("npqcij,ijco->npqo", windows, K, optimize=True) + b


def conv2d_backward(x: Tensor, K: Tensor, dy: Tensor) -> tuple[Tensor, Tensor, Tensor]:
    """Returns (dK, db, dx)."""
    kh, kw = K.shape[:2]
    windows = sliding_window_view(x, (kh, kw), axis=(1, 2))
    dK = np.einsum("npqcij,npqo->ijco", windows, dy, optimize=True)
    db = dy.sum(axis=(0, 1, 2))
    # Full correlation of the padded upstream gradient with the flipped kernel
    padded = np.pad(dy, ((0, 0), (kh - 1, kh - 1), (kw - 1, kw - 1), (0, 0)))
    dy_windows = sliding_window_view(padded, (kh, kw), axis=(1, 2))
    dx = np.einsum("nuvoij,ijco->nuvc", dy_windows, K[::-1, ::-1], optimize=True)
    return dK, db, dx


def maxpool2x2_forward(x: Tensor) -> tuple[Tensor, Tensor]:
    """
    2x2 max pool with stride 2; an odd trailing row or column is dropped.

    Returns:
        (y, argmax) with argmax in [0, 4) indexing the winner inside each window
    """
    n, height, width, channels = x.shape
    h2, w2 = height // 2, width // 2
    if h2 == 0 or w2 == 0:
        raise ShapeError(f"input {x.shape[1:3]} too small for 2x2 pooling")
    blocks = (
        x[:, : 2 * h2, : 2 * w2, :]
        .reshape(n, h2, 2, w2, 2, channels)
        .transpose(0, 1, 3, 5, 2, 4)
        .reshape(n, h2, w2, channels, 4)
    )
    argmax = blocks.argmax(axis=4)
    y = np.take_along_axis(blocks, argmax[..., None], axis=4)[..., 0]
    return y, argmax


def maxpool2x2_backward(x_shape: tuple[int, ...], argmax: Tensor, dy: Tensor) -> Tensor:
    n, height, width, channels = x_shape
    h2, w2 = argmax.shape[1:3]
    blocks = np.zeros((n, h2, w2, channels, 4))
    np.put_along_axis(blocks, argmax[..., None], dy[..., None], axis=4)
    dx = np.zeros(x_shape)
    dx[:, : 2 * h2, : 2 * w2, :] = (
        blocks.reshape(n, h2, w2, channels, 2, 2)
        .transpose(0, 1, 4, 2, 5, 3)
        .reshape(n, 2 * h2, 2 * w2, channels)
    )
    return dx


@dataclass
class ConvCache:
    x: Tensor
    names: tuple[str, ...]
    versions: tuple[int, ...]


class Conv2D:
    def __init__(
        self,
        store: ParamStore,
        name: str,
        in_channels: int,
        out_channels: int,
        kernel: int,
        rng: np.random.Generator,
    ):
        if kernel % 2 == 0:
            raise ShapeError(f"kernel size must be odd, got {kernel}")
        self.store = store
        fan_in = kernel * kernel * in_channels
        self.K = store.add(
            f"{name}.K", uniform_init(rng, (kernel, kernel, in_channels, out_channels), fan_in)
        )
        self.b = store.add(f"{name}.b", np.zeros(out_channels))

    @property
    def param_names(self) -> tuple[str, ...]:
        return (self.K.name, self.b.name)

    def forward(self, x: Tensor) -> tuple[Tensor, ConvCache]:
        y = conv2d_forward(x, self.K.value, self.b.value)
        return y, ConvCache(x, self.param_names, self.store.versions(self.param_names))

    def backward(self, cache: ConvCache, dy: Tensor) -> Tensor:
        self.store.check_versions(cache.names, cache.versions)
        dK, db, dx = conv2d_backward(cache.x, self.K.value, dy)
        self.K.grad += dK
        self.b.grad += db
        return dx
