"""Named parameters with gradients and update versions.

``Tensor`` throughout the neural app is a float64 ``numpy.ndarray``. Each
:class:`Parameter` carries a version number that the optimizer bumps on
every update; forward caches record the versions they were computed with
so a backward pass over a stale cache fails instead of mixing weights.
"""

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from apps.core.exceptions import NumericalError, ShapeError, StaleCacheError

Tensor = np.ndarray


@dataclass
class Parameter:
    name: str
    value: Tensor
    grad: Tensor = field(init=False)
    version: int = 0

    def __post_init__(self):
        self.value = np.asarray(self.value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)


class ParamStore:
    """Ordered collection of parameters shared by the layers of one model."""

    def __init__(self):
        self._params: dict[str, Parameter] = {}

    def add(self, name: str, value: Tensor) -> Parameter:
        if name in self._params:
            raise ShapeError(f"parameter '{name}' already exists")
        param = Parameter(name, value)
        if not np.all(np.isfinite(param.value)):
            raise NumericalError(f"parameter '{name}' initialized with non-finite values")
        self._params[name] = param
        return param

    def __getitem__(self, name: str) -> Parameter:
        return self._params[name]

    def __iter__(self) -> Iterator[Parameter]:
        return iter(self._params.values())

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def size(self) -> int:
        """Total number of scalar parameters."""
        return sum(p.value.size for p in self)

    def zero_grad(self) -> None:
        for param in self:
            param.grad.fill(0.0)

    def versions(self, names: tuple[str, ...]) -> tuple[int, ...]:
        return tuple(self._params[n].version for n in names)

    def check_versions(self, names: tuple[str, ...], versions: tuple[int, ...]) -> None:
        current = self.versions(names)
        if current != versions:
            raise StaleCacheError(
                "forward cache predates a parameter update",
                details={"params": list(names), "cached": list(versions), "current": list(current)},
            )

    def state_dict(self) -> dict[str, Tensor]:
        return {name: param.value.copy() for name, param in self._params.items()}

    def load_state_dict(self, arrays: dict[str, Tensor]) -> None:
        missing = set(self._params) - set(arrays)
        if missing:
            raise ShapeError(f"missing parameter(s) {sorted(missing)}")
        for name, param in self._params.items():
            value = np.asarray(arrays[name], dtype=np.float64)
            if value.shape != param.value.shape:
                raise ShapeError(
                    f"parameter '{name}' has shape {value.shape}, expected {param.value.shape}"
                )
            param.value = value.copy()
            param.grad = np.zeros_like(param.value)
            param.version += 1


def uniform_init(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> Tensor:
    """Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)]."""
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)
