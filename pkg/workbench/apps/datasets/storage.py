"""Dataset files (``.npz`` with a JSON header) and annotated-trace CSVs."""

from pathlib import Path
from typing import Any, Optional, Sequence, Union

import numpy as np
import pandas as pd

from apps.core.exceptions import DataError, SchemaError
from apps.core.storage import read_archive, write_archive

from .sequences import AnnotatedTrace, MinMax, Normalization, SequenceDataset

DATASET_FORMAT = "sequence-dataset"
DATASET_VERSION = 1


def save_dataset(
    train: SequenceDataset,
    test: SequenceDataset,
    path: Union[str, Path],
    meta: dict[str, Any] | None = None,
) -> Path:
    norm = train.norm
    header = {
        "time_steps": train.time_steps,
        "in_features": train.inputs.shape[2],
        "out_features": train.targets.shape[2],
        "train_samples": train.samples,
        "test_samples": test.samples,
        "normalization": "min-max",
        **(meta or {}),
    }
    arrays = {
        "train_inputs": train.inputs,
        "train_targets": train.targets,
        "test_inputs": test.inputs,
        "test_targets": test.targets,
        "in_low": norm.inputs.low,
        "in_high": norm.inputs.high,
        "out_low": norm.targets.low,
        "out_high": norm.targets.high,
    }
    return write_archive(path, DATASET_FORMAT, DATASET_VERSION, header, arrays)


def load_dataset(
    path: Union[str, Path],
) -> tuple[SequenceDataset, SequenceDataset, dict[str, Any]]:
    header, arrays = read_archive(path, DATASET_FORMAT, (DATASET_VERSION,))
    norm = Normalization(
        inputs=MinMax(low=arrays["in_low"], high=arrays["in_high"]),
        targets=MinMax(low=arrays["out_low"], high=arrays["out_high"]),
    )
    train = SequenceDataset(arrays["train_inputs"], arrays["train_targets"], norm)
    test = SequenceDataset(arrays["test_inputs"], arrays["test_targets"], norm)
    return train, test, header


# ============== Annotated traces (CSV) ==============

GEO_COLUMNS = ["geo_x", "geo_y", "geo_z"]
ANNOTATED_COLUMNS = ["trace_id", "step", "x", "y", *GEO_COLUMNS]


def write_annotated(traces: Sequence[AnnotatedTrace], path: Union[str, Path]) -> Path:
    """One row per step: trace_id, step, x, y, geo_x, geo_y, geo_z."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frames = [
        pd.DataFrame(
            {
                "trace_id": np.full(len(trace), trace_id, dtype=np.int64),
                "step": np.arange(len(trace), dtype=np.int64),
                "x": trace.positions[:, 0],
                "y": trace.positions[:, 1],
                **{name: trace.field[:, k] for k, name in enumerate(GEO_COLUMNS)},
            }
        )
        for trace_id, trace in enumerate(traces)
    ]
    if not frames:
        frame = pd.DataFrame(columns=ANNOTATED_COLUMNS)
    else:
        frame = pd.concat(frames, ignore_index=True)
    frame.to_csv(path, index=False, float_format="%.17g")
    return path


def read_geo_sequence(path: Union[str, Path], trace_id: Optional[int] = None) -> np.ndarray:
    """
    Field samples (T', 3) from a CSV with geo_x, geo_y, geo_z columns.

    Files with a trace_id column are filtered to ``trace_id`` (default: the
    first trace) and ordered by step.
    """
    frame = pd.read_csv(path, float_precision="round_trip")
    missing = [c for c in GEO_COLUMNS if c not in frame.columns]
    if missing:
        raise SchemaError(
            f"{path}: missing field column(s) {missing}", details={"columns": missing}
        )
    if "trace_id" in frame.columns:
        wanted = int(frame["trace_id"].min()) if trace_id is None else trace_id
        frame = frame[frame["trace_id"] == wanted]
        if frame.empty:
            raise DataError(f"{path}: no rows for trace {wanted}")
    if "step" in frame.columns:
        frame = frame.sort_values("step", kind="stable")
    return frame[GEO_COLUMNS].to_numpy(dtype=np.float64)
