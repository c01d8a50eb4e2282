"""LSTM layer with hand-derived backpropagation through time.

Gate blocks of ``W`` (4H x (F + H)) and ``b`` (4H) are ordered
input, forget, cell candidate, output ("ifgo"). For every step::

    z = W @ [x_t, h_{t-1}] + b
    i, f, o = sigmoid(z_i), sigmoid(z_f), sigmoid(z_o);  g = tanh(z_g)
    c_t = f * c_{t-1} + i * g
    h_t = o * tanh(c_t)

Gradients are summed over the batch; loss reduction is left to the loss.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import expit

from apps.core.exceptions import ShapeError

from .params import ParamStore, Tensor, uniform_init

GATE_ORDER = "ifgo"
FORGET_BIAS = 1.0


@dataclass(frozen=True)
class LstmState:
    """Carried hidden and cell state, each (batch, H)."""

    h: Tensor
    c: Tensor

    @classmethod
    def zeros(cls, batch: int, hidden: int) -> "LstmState":
        return cls(h=np.zeros((batch, hidden)), c=np.zeros((batch, hidden)))


@dataclass
class LstmCache:
    x: Tensor
    h_prev: Tensor  # (T, B, H) state entering each step
    c_prev: Tensor
    gates: Tensor  # (T, B, 4H) activated gates
    tanh_c: Tensor  # (T, B, H)
    names: tuple[str, ...] = ()
    versions: tuple[int, ...] = ()


@dataclass
class LstmGrads:
    dW: Tensor
    db: Tensor
    dx: Tensor
    dh0: Tensor
    dc0: Tensor


def lstm_forward(
    W: Tensor, b: Tensor, x: Tensor, state: LstmState
) -> tuple[Tensor, LstmState, LstmCache]:
    """
    Run the cell over ``x`` (batch, T, F) from ``state``.

    Returns:
        outputs (batch, T, H), final state, cache for :func:`lstm_backward`
    """
    if x.ndim != 3:
        raise ShapeError(f"LSTM input must be (batch, T, F), got {x.shape}")
    batch, steps, features = x.shape
    hidden = W.shape[0] // 4
    if W.shape != (4 * hidden, features + hidden) or b.shape != (4 * hidden,):
        raise ShapeError(
            f"LSTM weights {W.shape}/{b.shape} do not fit {features} input features"
        )
    if state.h.shape != (batch, hidden) or state.c.shape != (batch, hidden):
        raise ShapeError(f"LSTM state {state.h.shape} does not match ({batch}, {hidden})")

    h, c = state.h, state.c
    y = np.empty((batch, steps, hidden))
    h_prev = np.empty((steps, batch, hidden))
    c_prev = np.empty((steps, batch, hidden))
    gates = np.empty((steps, batch, 4 * hidden))
    tanh_c = np.empty((steps, batch, hidden))
    Wx, Wh = W[:, :features], W[:, features:]

    for t in range(steps):
        h_prev[t], c_prev[t] = h, c
        z = x[:, t, :] @ Wx.T + h @ Wh.T + b
        act = np.empty_like(z)
        act[:, : 2 * hidden] = expit(z[:, : 2 * hidden])
        act[:, 2 * hidden : 3 * hidden] = np.tanh(z[:, 2 * hidden : 3 * hidden])
        act[:, 3 * hidden :] = expit(z[:, 3 * hidden :])
        i, f, g, o = np.split(act, 4, axis=1)
        c = f * c + i * g
        tc = np.tanh(c)
        h = o * tc
        gates[t], tanh_c[t], y[:, t, :] = act, tc, h

    cache = LstmCache(x=x, h_prev=h_prev, c_prev=c_prev, gates=gates, tanh_c=tanh_c)
    return y, LstmState(h=h, c=c), cache


def lstm_backward(
    W: Tensor,
    cache: LstmCache,
    dy: Tensor,
    d_state: Optional[LstmState] = None,
) -> LstmGrads:
    """
    Backpropagate ``dy`` (batch, T, H) through a cached forward pass.

    ``d_state`` is the gradient w.r.t. the final (h, c), if it feeds a loss.
    """
    x = cache.x
    batch, steps, features = x.shape
    hidden = W.shape[0] // 4
    if dy.shape != (batch, steps, hidden):
        raise ShapeError(
            f"upstream gradient {dy.shape} does not match ({batch}, {steps}, {hidden})"
        )

    dW = np.zeros_like(W)
    db = np.zeros(4 * hidden)
    dx = np.empty_like(x)
    dh_next = np.zeros((batch, hidden)) if d_state is None else d_state.h.copy()
    dc_next = np.zeros((batch, hidden)) if d_state is None else d_state.c.copy()

    for t in reversed(range(steps)):
        i, f, g, o = np.split(cache.gates[t], 4, axis=1)
        tc = cache.tanh_c[t]
        dh = dy[:, t, :] + dh_next
        dc = dc_next + dh * o * (1.0 - tc * tc)
        dz = np.concatenate(
            [
                dc * g * i * (1.0 - i),
                dc * cache.c_prev[t] * f * (1.0 - f),
                dc * i * (1.0 - g * g),
                dh * tc * o * (1.0 - o),
            ],
            axis=1,
        )
        xh = np.concatenate([x[:, t, :], cache.h_prev[t]], axis=1)
        dW += dz.T @ xh
        db += dz.sum(axis=0)
        dxh = dz @ W
        dx[:, t, :] = dxh[:, :features]
        dh_next = dxh[:, features:]
        dc_next = dc * f

    return LstmGrads(dW=dW, db=db, dx=dx, dh0=dh_next, dc0=dc_next)


class LstmLayer:
    """LSTM whose weights live in a shared :class:`ParamStore`."""

    def __init__(
        self,
        store: ParamStore,
        name: str,
        in_features: int,
        hidden: int,
        rng: np.random.Generator,
    ):
        self.store = store
        self.name = name
        self.in_features = in_features
        self.hidden = hidden
        fan_in = in_features + hidden
        bias = np.zeros(4 * hidden)
        bias[hidden : 2 * hidden] = FORGET_BIAS
        self.W = store.add(f"{name}.W", uniform_init(rng, (4 * hidden, fan_in), fan_in))
        self.b = store.add(f"{name}.b", bias)

    @property
    def param_names(self) -> tuple[str, ...]:
        return (self.W.name, self.b.name)

    def forward(
        self, x: Tensor, state: Optional[LstmState] = None
    ) -> tuple[Tensor, LstmState, LstmCache]:
        state = state or LstmState.zeros(x.shape[0], self.hidden)
        y, final, cache = lstm_forward(self.W.value, self.b.value, x, state)
        cache.names = self.param_names
        cache.versions = self.store.versions(self.param_names)
        return y, final, cache

    def backward(
        self, cache: LstmCache, dy: Tensor, d_state: Optional[LstmState] = None
    ) -> LstmGrads:
        """Accumulate dW, db into the store and return all gradients."""
        self.store.check_versions(cache.names, cache.versions)
        grads = lstm_backward(self.W.value, cache, dy, d_state)
        self.W.grad += grads.dW
        self.b.grad += grads.db
        return grads
