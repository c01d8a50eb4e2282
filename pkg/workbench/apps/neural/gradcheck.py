"""Central finite-difference gradient checks."""

from typing import Callable

import numpy as np

from .params import Tensor

DEFAULT_EPS = 1e-5


def numeric_gradient(f: Callable[[], float], x: Tensor, eps: float = DEFAULT_EPS) -> Tensor:
    """d f / d x by central differences; ``x`` is perturbed in place and restored."""
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    out = grad.reshape(-1)
    for k in range(flat.size):
        saved = flat[k]
        flat[k] = saved + eps
        plus = f()
        flat[k] = saved - eps
        minus = f()
        flat[k] = saved
        out[k] = (plus - minus) / (2.0 * eps)
    return grad


def relative_error(analytic: Tensor, numeric: Tensor) -> float:
    """||a - n|| / max(||a|| + ||n||, 1e-8)."""
    diff = np.linalg.norm(analytic - numeric)
    scale = max(np.linalg.norm(analytic) + np.linalg.norm(numeric), 1e-8)
    return float(diff / scale)
