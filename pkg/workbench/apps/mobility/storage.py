"""Trace CSV files: one row per step with columns trace_id, step, x, y."""

from pathlib import Path
from typing import Sequence, Union

import numpy as np
import pandas as pd

from apps.core.exceptions import SchemaError

from .schemas import Trace

TRACE_COLUMNS = ["trace_id", "step", "x", "y"]


def traces_frame(traces: Sequence[Trace]) -> pd.DataFrame:
    frames = [
        pd.DataFrame(
            {
                "trace_id": np.full(len(trace), trace_id, dtype=np.int64),
                "step": np.arange(len(trace), dtype=np.int64),
                "x": trace.positions[:, 0],
                "y": trace.positions[:, 1],
            }
        )
        for trace_id, trace in enumerate(traces)
    ]
    if not frames:
        return pd.DataFrame(columns=TRACE_COLUMNS)
    return pd.concat(frames, ignore_index=True)


def write_traces(traces: Sequence[Trace], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    traces_frame(traces).to_csv(path, index=False, float_format="%.17g")
    return path


def read_traces(path: Union[str, Path]) -> list[np.ndarray]:
    """Positions (n_steps, 2) of every trace, ordered by trace_id."""
    frame = pd.read_csv(
        path, dtype={"trace_id": np.int64, "step": np.int64}, float_precision="round_trip"
    )
    missing = [c for c in TRACE_COLUMNS if c not in frame.columns]
    if missing:
        raise SchemaError(
            f"{path}: missing trace column(s) {missing}", details={"columns": missing}
        )
    frame = frame.sort_values(["trace_id", "step"], kind="stable")
    return [
        group[["x", "y"]].to_numpy(dtype=np.float64)
        for _, group in frame.groupby("trace_id", sort=True)
    ]
