"""SVG figures with twin CSV tables.

Every emitter writes the numbers it plots to ``<prefix>.csv`` first; the
SVG is a rendering of that table. Floats are written with 17 significant
digits so the CSV reproduces the values bit-exactly. SVG output carries no
date and a fixed id salt, so equal inputs give equal bytes.
"""

import logging
from pathlib import Path
from typing import TYPE_CHECKING, Mapping, Sequence, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from apps.geomap.schemas import TestBed  # noqa: E402

from .stats import EpochRecord, EvalReport  # noqa: E402

if TYPE_CHECKING:
    from apps.geomap.maps import Raster

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
FIGURE_LONG_SIDE_IN = 10.0
SVG_METADATA = {"Date": None}

plt.rcParams["svg.hashsalt"] = "workbench"
plt.rcParams["svg.fonttype"] = "none"

PathLike = Union[str, Path]


def _prefix(path: PathLike) -> Path:
    path = Path(path)
    return path.with_suffix("") if path.suffix in (".csv", ".svg") else path


def _write_csv(frame: pd.DataFrame, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def _save(fig: plt.Figure, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata=SVG_METADATA)
    plt.close(fig)
    logger.debug("Wrote figure %s", path)
    return path


def bed_figsize(bed: TestBed) -> tuple[float, float]:
    """Figure size in inches with the bed's aspect ratio."""
    scale = FIGURE_LONG_SIDE_IN / max(bed.width_m, bed.height_m)
    return bed.width_m * scale, bed.height_m * scale


def _bed_axes(bed: TestBed) -> tuple[plt.Figure, plt.Axes]:
    fig = plt.figure(figsize=bed_figsize(bed))
    ax = fig.add_axes([0.0, 0.0, 1.0, 1.0])
    ax.set_xlim(0.0, bed.width_m)
    ax.set_ylim(0.0, bed.height_m)
    ax.set_axis_off()
    return fig, ax


# ============== Training history ==============

HISTORY_COLUMNS = list(EpochRecord.model_fields)


def history_frame(history: Sequence[EpochRecord]) -> pd.DataFrame:
    if not history:
        return pd.DataFrame(columns=HISTORY_COLUMNS)
    return pd.DataFrame([record.model_dump() for record in history], columns=HISTORY_COLUMNS)


def emit_history(history: Sequence[EpochRecord], path: PathLike) -> list[Path]:
    """Loss and accuracy curves per epoch."""
    prefix = _prefix(path)
    frame = history_frame(history)
    written = [_write_csv(frame, prefix.with_suffix(".csv"))]

    fig, (loss_ax, acc_ax) = plt.subplots(1, 2, figsize=(10, 4))
    if len(frame):
        loss_ax.plot(frame["epoch"], frame["train_loss"], label="train")
        loss_ax.plot(frame["epoch"], frame["test_loss"], label="test")
        acc_ax.plot(frame["epoch"], frame["train_accuracy"], label="train")
        acc_ax.plot(frame["epoch"], frame["accuracy"], label="test")
        loss_ax.legend()
        acc_ax.legend()
    loss_ax.set_xlabel("epoch")
    loss_ax.set_ylabel("loss")
    acc_ax.set_xlabel("epoch")
    acc_ax.set_ylabel("accuracy")
    acc_ax.set_ylim(0.0, 1.0)
    fig.tight_layout()
    written.append(_save(fig, prefix.with_suffix(".svg")))
    return written


def read_history(path: PathLike) -> list[EpochRecord]:
    frame = pd.read_csv(path, float_precision="round_trip")
    return [EpochRecord(**row) for row in frame.to_dict(orient="records")]


# ============== Field raster ==============


def raster_frame(raster: "Raster", names: Sequence[str]) -> pd.DataFrame:
    gx, gy = np.meshgrid(raster.xs, raster.ys)
    frame = pd.DataFrame({"x": gx.ravel(), "y": gy.ravel()})
    for k, name in enumerate(names):
        frame[name] = raster.values[:, :, k].ravel()
    return frame


def emit_raster(
    raster: "Raster", path: PathLike, names: Sequence[str], svg: bool = True
) -> list[Path]:
    """Long-format CSV (x, y, one column per component) and one heat map per component."""
    prefix = _prefix(path)
    written = [_write_csv(raster_frame(raster, names), prefix.with_suffix(".csv"))]
    if not svg:
        return written
    for k, name in enumerate(names):
        fig, ax = _bed_axes(raster.bed)
        ax.imshow(
            raster.values[:, :, k],
            origin="lower",
            extent=(0.0, raster.bed.width_m, 0.0, raster.bed.height_m),
            aspect="auto",
            interpolation="nearest",
            cmap="viridis",
        )
        written.append(_save(fig, prefix.parent / f"{prefix.name}_{name}.svg"))
    return written


# ============== RSS value histogram ==============


def emit_rss_histogram(histogram: Mapping[str, Mapping[int, int]], path: PathLike) -> list[Path]:
    """Frequency of each detected RSS value, one bar series per floor."""
    prefix = _prefix(path)
    rows = [
        {"floor": floor, "rss": int(value), "count": int(count)}
        for floor, counts in histogram.items()
        for value, count in sorted(counts.items())
    ]
    frame = pd.DataFrame(rows, columns=["floor", "rss", "count"])
    written = [_write_csv(frame, prefix.with_suffix(".csv"))]

    fig, ax = plt.subplots(figsize=(8, 4))
    for floor, group in frame.groupby("floor", sort=True):
        ax.bar(group["rss"], group["count"], width=0.8, alpha=0.6, label=str(floor))
    if len(frame):
        ax.legend(title="floor")
    ax.set_xlabel("RSS (dBm)")
    ax.set_ylabel("frequency")
    fig.tight_layout()
    written.append(_save(fig, prefix.with_suffix(".svg")))
    return written


# ============== Error boxes ==============

BOX_COLUMNS = [
    "label", "n_samples", "mean_err_m", "median_err_m", "p75_low", "p75_high",
    "p95_low", "p95_high", "max_err_m", "p75_mean_err_m",
]


def boxes_frame(reports: Mapping[str, EvalReport]) -> pd.DataFrame:
    rows = [
        {
            "label": label,
            "n_samples": r.n_samples,
            "mean_err_m": r.mean_err_m,
            "median_err_m": r.median_err_m,
            "p75_low": r.p75_box[0],
            "p75_high": r.p75_box[1],
            "p95_low": r.p95_whisker[0],
            "p95_high": r.p95_whisker[1],
            "max_err_m": r.max_err_m,
            "p75_mean_err_m": r.p75_mean_err_m,
        }
        for label, r in reports.items()
    ]
    return pd.DataFrame(rows, columns=BOX_COLUMNS)


def emit_error_boxes(reports: Mapping[str, EvalReport], path: PathLike) -> list[Path]:
    """Box per report: 75% box, 95% whiskers, median line, mean marker, max flier."""
    prefix = _prefix(path)
    frame = boxes_frame(reports)
    written = [_write_csv(frame, prefix.with_suffix(".csv"))]

    stats = [
        {
            "label": row.label,
            "q1": row.p75_low,
            "q3": row.p75_high,
            "whislo": row.p95_low,
            "whishi": row.p95_high,
            "med": row.median_err_m,
            "mean": row.mean_err_m,
            "fliers": [row.max_err_m],
        }
        for row in frame.itertuples()
    ]
    fig, ax = plt.subplots(figsize=(max(4.0, 1.5 * len(stats)), 4))
    if stats:
        ax.bxp(stats, showmeans=True, showfliers=True)
    ax.set_ylabel("localization error (m)")
    fig.tight_layout()
    written.append(_save(fig, prefix.with_suffix(".svg")))
    return written


# ============== Traces ==============


def emit_trace(positions: np.ndarray, bed: TestBed, path: PathLike) -> list[Path]:
    prefix = _prefix(path)
    frame = pd.DataFrame(
        {"step": np.arange(len(positions)), "x": positions[:, 0], "y": positions[:, 1]}
    )
    written = [_write_csv(frame, prefix.with_suffix(".csv"))]
    fig, ax = _bed_axes(bed)
    ax.plot(positions[:, 0], positions[:, 1], linewidth=0.6)
    written.append(_save(fig, prefix.with_suffix(".svg")))
    return written


def emit_waypoint_density(waypoints: np.ndarray, bed: TestBed, path: PathLike) -> list[Path]:
    """2-D histogram of waypoints over the bed's reference cells."""
    prefix = _prefix(path)
    x_edges = np.linspace(0.0, bed.width_m, bed.nx)
    y_edges = np.linspace(0.0, bed.height_m, bed.ny)
    counts, _, _ = np.histogram2d(waypoints[:, 0], waypoints[:, 1], bins=(x_edges, y_edges))
    i, j = np.meshgrid(np.arange(len(x_edges) - 1), np.arange(len(y_edges) - 1), indexing="ij")
    frame = pd.DataFrame(
        {
            "x_low": x_edges[i.ravel()],
            "x_high": x_edges[i.ravel() + 1],
            "y_low": y_edges[j.ravel()],
            "y_high": y_edges[j.ravel() + 1],
            "count": counts.ravel().astype(np.int64),
        }
    )
    written = [_write_csv(frame, prefix.with_suffix(".csv"))]
    fig, ax = _bed_axes(bed)
    ax.imshow(
        counts.T,
        origin="lower",
        extent=(0.0, bed.width_m, 0.0, bed.height_m),
        aspect="auto",
        interpolation="nearest",
        cmap="magma",
    )
    written.append(_save(fig, prefix.with_suffix(".svg")))
    return written
