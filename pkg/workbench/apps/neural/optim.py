"""Adam optimizer."""

import logging
from dataclasses import dataclass, field

import numpy as np

from apps.core.exceptions import NumericalError, ShapeError

from .params import ParamStore, Tensor

logger = logging.getLogger(__name__)


def adam_update(
    theta: Tensor,
    grad: Tensor,
    m: Tensor,
    v: Tensor,
    t: int,
    lr: float = 0.001,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[Tensor, Tensor, Tensor]:
    """
    One Adam update of a single tensor at step ``t`` (1-based).

    Returns:
        (theta', m', v')
    """
    m = beta1 * m + (1.0 - beta1) * grad
    v = beta2 * v + (1.0 - beta2) * (grad * grad)
    m_hat = m / (1.0 - beta1**t)
    v_hat = v / (1.0 - beta2**t)
    return theta - lr * m_hat / (np.sqrt(v_hat) + eps), m, v


@dataclass
class AdamState:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict[str, Tensor] = field(default_factory=dict)
    v: dict[str, Tensor] = field(default_factory=dict)


def adam_step(store: ParamStore, state: AdamState) -> AdamState:
    """
    Update every parameter of ``store`` from its accumulated gradient.

    All gradients are checked before anything changes; a non-finite one
    aborts the step. Updated parameters get a new version.
    """
    for param in store:
        if param.grad.shape != param.value.shape:
            raise ShapeError(f"gradient of '{param.name}' has shape {param.grad.shape}")
        if not np.all(np.isfinite(param.grad)):
            raise NumericalError(
                f"non-finite gradient for '{param.name}' at optimizer step {state.t + 1}",
                details={"param": param.name, "step": state.t + 1},
            )

    state.t += 1
    for param in store:
        m = state.m.get(param.name, np.zeros_like(param.value))
        v = state.v.get(param.name, np.zeros_like(param.value))
        param.value, state.m[param.name], state.v[param.name] = adam_update(
            param.value, param.grad, m, v, state.t,
            lr=state.lr, beta1=state.beta1, beta2=state.beta2, eps=state.eps,
        )
        param.version += 1
    return state
