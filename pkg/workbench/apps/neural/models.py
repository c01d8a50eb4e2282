"""Network stacks built from the hand-derived layers."""

from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from apps.core.exceptions import ShapeError
from apps.core.rng import STREAM_INIT, make_rng

from .conv import Conv2D, ConvCache, maxpool2x2_backward, maxpool2x2_forward
from .layers import Dense, DenseCache, dropout, dropout_backward, relu, relu_backward
from .lstm import LstmCache, LstmLayer, LstmState
from .params import ParamStore, Tensor


@dataclass
class RegressorCache:
    lstm: list[LstmCache] = field(default_factory=list)
    masks: list[Optional[Tensor]] = field(default_factory=list)
    head: Optional[DenseCache] = None


class LstmRegressor:
    """
    Stacked LSTM -> dropout (after every LSTM layer) -> time-distributed dense.

    Maps (batch, T, in_features) field windows to (batch, T, out_features)
    positions. States are carried per layer.
    """

    kind = "lstm-regressor"

    def __init__(
        self,
        in_features: int = 3,
        hidden: int = 128,
        layers: int = 2,
        out_features: int = 2,
        dropout: float = 0.2,
        seed: int = 0,
    ):
        self.in_features = in_features
        self.hidden = hidden
        self.layers = layers
        self.out_features = out_features
        self.dropout = dropout
        self.seed = seed
        self.store = ParamStore()
        rng = make_rng(seed, STREAM_INIT)
        self.lstms = [
            LstmLayer(self.store, f"lstm{k}", in_features if k == 0 else hidden, hidden, rng)
            for k in range(layers)
        ]
        self.head = Dense(self.store, "head", hidden, out_features, rng)

    def config(self) -> dict[str, Any]:
        return {
            "in_features": self.in_features,
            "hidden": self.hidden,
            "layers": self.layers,
            "out_features": self.out_features,
            "dropout": self.dropout,
            "seed": self.seed,
        }

    def zero_state(self, batch: int) -> list[LstmState]:
        return [LstmState.zeros(batch, self.hidden) for _ in self.lstms]

    def forward(
        self,
        x: Tensor,
        states: Optional[Sequence[LstmState]] = None,
        training: bool = False,
        rng: Optional[np.random.Generator] = None,
    ) -> tuple[Tensor, list[LstmState], RegressorCache]:
        if x.ndim != 3 or x.shape[2] != self.in_features:
            raise ShapeError(f"expected (batch, T, {self.in_features}) input, got {x.shape}")
        states = list(states) if states is not None else self.zero_state(x.shape[0])
        cache = RegressorCache()
        new_states = []
        h = x
        for layer, state in zip(self.lstms, states):
            h, final, layer_cache = layer.forward(h, state)
            h, mask = dropout(h, self.dropout, training, rng)
            cache.lstm.append(layer_cache)
            cache.masks.append(mask)
            new_states.append(final)
        y, cache.head = self.head.forward(h)
        return y, new_states, cache

    def backward(self, cache: RegressorCache, dy: Tensor) -> Tensor:
        """Accumulate parameter gradients; carried states are treated as constants."""
        dh = self.head.backward(cache.head, dy)
        for layer, layer_cache, mask in reversed(list(zip(self.lstms, cache.lstm, cache.masks))):
            dh = layer.backward(layer_cache, dropout_backward(mask, dh)).dx
        return dh

    def predict(self, x: Tensor, states: Optional[Sequence[LstmState]] = None) -> Tensor:
        y, _, _ = self.forward(x, states, training=False)
        return y


@dataclass
class ClassifierCache:
    convs: list[ConvCache] = field(default_factory=list)
    pre_relu: list[Tensor] = field(default_factory=list)
    pool_shape: tuple[int, ...] = ()
    pool_argmax: Optional[Tensor] = None
    masks: list[Optional[Tensor]] = field(default_factory=list)
    flat_shape: tuple[int, ...] = ()
    hidden: Optional[DenseCache] = None
    hidden_pre: Optional[Tensor] = None
    out: Optional[DenseCache] = None


class CnnClassifier:
    """
    conv(k x k) + ReLU per entry of ``channels`` -> 2x2 max pool -> dropout
    -> dense(dense_units) + ReLU -> dropout -> dense(classes) logits.
    """

    kind = "cnn-classifier"

    def __init__(
        self,
        classes: int,
        image_side: int = 23,
        channels: Sequence[int] = (8, 16, 16, 32),
        kernel: int = 3,
        dense_units: int = 64,
        dropout: Sequence[float] = (0.25, 0.5),
        seed: int = 0,
    ):
        side = image_side
        for _ in channels:
            side -= kernel - 1
        side //= 2
        if side < 1:
            raise ShapeError(
                f"image side {image_side} too small for {len(channels)} {kernel}x{kernel} "
                "convolutions and a 2x2 pool"
            )
        self.classes = classes
        self.image_side = image_side
        self.channels = tuple(channels)
        self.kernel = kernel
        self.dense_units = dense_units
        self.dropout = tuple(dropout)
        self.seed = seed
        self.flat_features = side * side * self.channels[-1]

        self.store = ParamStore()
        rng = make_rng(seed, STREAM_INIT)
        in_channels = 1
        self.convs = []
        for k, out_channels in enumerate(self.channels):
            self.convs.append(
                Conv2D(self.store, f"conv{k}", in_channels, out_channels, kernel, rng)
            )
            in_channels = out_channels
        self.hidden = Dense(self.store, "dense0", self.flat_features, dense_units, rng)
        self.out = Dense(self.store, "dense1", dense_units, classes, rng)

    def config(self) -> dict[str, Any]:
        return {
            "classes": self.classes,
            "image_side": self.image_side,
            "channels": list(self.channels),
            "kernel": self.kernel,
            "dense_units": self.dense_units,
            "dropout": list(self.dropout),
            "seed": self.seed,
        }

    def forward(
        self, images: Tensor, training: bool = False, rng: Optional[np.random.Generator] = None
    ) -> tuple[Tensor, ClassifierCache]:
        x = images[..., None] if images.ndim == 3 else images
        if x.shape[1:] != (self.image_side, self.image_side, 1):
            raise ShapeError(
                f"expected ({self.image_side}, {self.image_side}) images, got {images.shape[1:]}"
            )
        cache = ClassifierCache()
        for conv in self.convs:
            z, conv_cache = conv.forward(x)
            cache.convs.append(conv_cache)
            cache.pre_relu.append(z)
            x = relu(z)
        cache.pool_shape = x.shape
        x, cache.pool_argmax = maxpool2x2_forward(x)
        x, mask = dropout(x, self.dropout[0], training, rng)
        cache.masks.append(mask)
        cache.flat_shape = x.shape
        x = x.reshape(x.shape[0], -1)
        z, cache.hidden = self.hidden.forward(x)
        cache.hidden_pre = z
        x, mask = dropout(relu(z), self.dropout[1], training, rng)
        cache.masks.append(mask)
        logits, cache.out = self.out.forward(x)
        return logits, cache

    def backward(self, cache: ClassifierCache, dlogits: Tensor) -> Tensor:
        dx = self.out.backward(cache.out, dlogits)
        dx = relu_backward(cache.hidden_pre, dropout_backward(cache.masks[1], dx))
        dx = self.hidden.backward(cache.hidden, dx).reshape(cache.flat_shape)
        dx = dropout_backward(cache.masks[0], dx)
        dx = maxpool2x2_backward(cache.pool_shape, cache.pool_argmax, dx)
        for conv, conv_cache, z in reversed(list(zip(self.convs, cache.convs, cache.pre_relu))):
            dx = conv.backward(conv_cache, relu_backward(z, dx))
        return dx

    def logits(self, images: Tensor) -> Tensor:
        out, _ = self.forward(images, training=False)
        return out

    def predict(self, images: Tensor) -> Tensor:
        return self.logits(images).argmax(axis=1)
