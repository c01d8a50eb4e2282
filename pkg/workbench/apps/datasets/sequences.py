"""Sliding-window sequence datasets for trajectory regression.

Inputs are the field samples (GeoX, GeoY, GeoZ) along a trace and targets
the positions (x, y). Windows of ``time_steps`` consecutive steps become
samples; samples of several traces are concatenated in trace order and
never straddle two traces.
"""

import logging
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from apps.core.exceptions import ConfigError, DataError, DomainError, SchemaError, ShapeError
from apps.geomap.maps import GeoMap, query_many

logger = logging.getLogger(__name__)

IN_FEATURES = 3
OUT_FEATURES = 2


@dataclass(frozen=True)
class AnnotatedTrace:
    """Positions (N, 2) m and the field (N, 3) uT sampled at each of them."""

    positions: np.ndarray
    field: np.ndarray

    def __len__(self) -> int:
        return len(self.positions)


@dataclass(frozen=True)
class MinMax:
    """Per-feature min-max scaling; features with max == min map to 0."""

    low: np.ndarray
    high: np.ndarray

    @classmethod
    def fit(cls, values: np.ndarray) -> "MinMax":
        flat = values.reshape(-1, values.shape[-1])
        return cls(low=flat.min(axis=0), high=flat.max(axis=0))

    @property
    def span(self) -> np.ndarray:
        return self.high - self.low

    @property
    def degenerate(self) -> np.ndarray:
        return ~(self.span > 0)

    def transform(self, values: np.ndarray) -> np.ndarray:
        span = np.where(self.degenerate, 1.0, self.span)
        scaled = (values - self.low) / span
        return np.where(self.degenerate, 0.0, scaled)

    def inverse(self, values: np.ndarray) -> np.ndarray:
        restored = values * self.span + self.low
        return np.where(self.degenerate, self.low, restored)


@dataclass(frozen=True)
class Normalization:
    inputs: MinMax
    targets: MinMax

    def to_dict(self) -> dict[str, dict[str, list[float]]]:
        """JSON-ready form; floats survive the round trip exactly."""
        return {
            name: {"low": scale.low.tolist(), "high": scale.high.tolist()}
            for name, scale in (("inputs", self.inputs), ("targets", self.targets))
        }

    @classmethod
    def from_dict(cls, data: dict[str, dict[str, list[float]]]) -> "Normalization":
        try:
            return cls(
                **{
                    name: MinMax(
                        low=np.asarray(data[name]["low"], dtype=np.float64),
                        high=np.asarray(data[name]["high"], dtype=np.float64),
                    )
                    for name in ("inputs", "targets")
                }
            )
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed normalization block: {exc}") from exc


@dataclass(frozen=True)
class SequenceDataset:
    """
    Windowed samples.

    Attributes:
        inputs: (samples, time_steps, 3)
        targets: (samples, time_steps, 2)
        norm: scaling the arrays are expressed in; None for raw units
    """

    inputs: np.ndarray
    targets: np.ndarray
    norm: Optional[Normalization] = None

    def __post_init__(self):
        if self.inputs.shape[:2] != self.targets.shape[:2]:
            raise ShapeError(
                f"inputs {self.inputs.shape} and targets {self.targets.shape} differ in "
                "samples or time steps"
            )

    @property
    def samples(self) -> int:
        return self.inputs.shape[0]

    @property
    def time_steps(self) -> int:
        return self.inputs.shape[1]

    def targets_m(self) -> np.ndarray:
        """Targets in metres."""
        return self.norm.targets.inverse(self.targets) if self.norm else self.targets


def annotate(positions: np.ndarray, geomap: GeoMap) -> AnnotatedTrace:
    """
    Sample the map at every step of a trace.

    Raises:
        DomainError: a position outside the map's bed, naming the step
    """
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 2)
    try:
        field = query_many(geomap, positions)
    except DomainError as exc:
        step = exc.details.get("index")
        raise DomainError(
            f"trace step {step} at ({positions[step, 0]}, {positions[step, 1]}) "
            f"is outside bed {geomap.bed.label()}",
            details={"step": step},
        ) from exc
    return AnnotatedTrace(positions=positions, field=field)


def sliding_window(
    inputs: np.ndarray, targets: np.ndarray, time_steps: int, stride: int = 1
) -> SequenceDataset:
    """
    Windows ``[i, i + time_steps)`` for i = 0, stride, 2 * stride, ...

    With stride 1 a series of N steps yields N - time_steps + 1 samples.
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if time_steps < 1 or stride < 1:
        raise ConfigError(f"time_steps and stride must be >= 1, got {time_steps}, {stride}")
    if len(inputs) != len(targets):
        raise ShapeError(f"{len(inputs)} input steps but {len(targets)} target steps")
    if len(inputs) < time_steps:
        raise DataError(
            f"series of {len(inputs)} steps is shorter than the window of {time_steps}"
        )
    # sliding_window_view puts the window axis last: (S, F, T) -> (S, T, F)
    x = sliding_window_view(inputs, time_steps, axis=0)[::stride].transpose(0, 2, 1)
    y = sliding_window_view(targets, time_steps, axis=0)[::stride].transpose(0, 2, 1)
    return SequenceDataset(inputs=np.ascontiguousarray(x), targets=np.ascontiguousarray(y))


def windows_from_traces(
    traces: Sequence[AnnotatedTrace], time_steps: int, stride: int = 1
) -> SequenceDataset:
    """Windows of every trace, concatenated in trace order."""
    if not traces:
        raise DataError("no traces to window")
    parts = [sliding_window(t.field, t.positions, time_steps, stride) for t in traces]
    return SequenceDataset(
        inputs=np.concatenate([p.inputs for p in parts]),
        targets=np.concatenate([p.targets for p in parts]),
    )


def split_index(samples: int, split_ratio: float) -> int:
    if not 0.0 < split_ratio < 1.0:
        raise ConfigError(f"split ratio must be in (0, 1), got {split_ratio}")
    n_train = int(round(samples * split_ratio))
    if n_train < 1 or n_train >= samples:
        raise DataError(
            f"split {split_ratio} of {samples} sample(s) leaves an empty train or test split"
        )
    return n_train


def normalize(
    ds: SequenceDataset, split_ratio: float
) -> tuple[SequenceDataset, SequenceDataset]:
    """
    Chronological train/test split with min-max scaling fitted on train only.

    The first ``round(samples * split_ratio)`` samples are the training split.
    Test values may fall outside [0, 1].
    """
    n_train = split_index(ds.samples, split_ratio)
    norm = Normalization(
        inputs=MinMax.fit(ds.inputs[:n_train]),
        targets=MinMax.fit(ds.targets[:n_train]),
    )
    for name, scale in (("input", norm.inputs), ("target", norm.targets)):
        if scale.degenerate.any():
            logger.warning(
                "Degenerate %s feature(s) %s map to 0",
                name,
                np.flatnonzero(scale.degenerate).tolist(),
            )

    def scaled(start: int, stop: Optional[int]) -> SequenceDataset:
        return replace(
            ds,
            inputs=norm.inputs.transform(ds.inputs[start:stop]),
            targets=norm.targets.transform(ds.targets[start:stop]),
            norm=norm,
        )

    return scaled(0, n_train), scaled(n_train, None)
