"""Localization error report for a trained model or a pair of position files.

Usage:
    python manage.py evaluate --model model.npz --ds ds.npz --report report.json --boxes boxes
    python manage.py evaluate --model cnn.npz --images images.npz --report report.json
    python manage.py evaluate --pred path.csv --truth annotated.csv --report report.json
"""

from pathlib import Path

import numpy as np
import pandas as pd

from apps.core.exceptions import ConfigError, SchemaError
from apps.core.commands import WorkbenchCommand
from apps.core.utils import build_config
from apps.datasets.storage import load_dataset
from apps.metrics.plots import emit_error_boxes, read_history
from apps.metrics.stats import EvalReport, error_stats
from apps.neural.checkpoint import load_model
from apps.neural.models import CnnClassifier, LstmRegressor
from apps.pipelines.cnn import evaluate_cnn, split_samples
from apps.pipelines.lstm import evaluate_lstm
from apps.pipelines.schemas import CnnPipelineConfig
from apps.rss_image.storage import load_images


def read_positions(path: Path, trace_id: int | None = None) -> np.ndarray:
    """(x, y) columns ordered by step; files with trace_id keep one trace."""
    frame = pd.read_csv(path, float_precision="round_trip")
    if not {"x", "y"} <= set(frame.columns):
        raise SchemaError(f"{path}: x and y columns are required")
    if "trace_id" in frame.columns:
        wanted = int(frame["trace_id"].min()) if trace_id is None else trace_id
        frame = frame[frame["trace_id"] == wanted]
    if "step" in frame.columns:
        frame = frame.sort_values("step", kind="stable")
    return frame[["x", "y"]].to_numpy(dtype=np.float64)


class Command(WorkbenchCommand):
    help = "Error statistics (mean, 75% box, 95% whiskers, max) in metres"

    def add_arguments(self, parser):
        parser.add_argument("--model", type=Path, default=None, help="Checkpoint")
        parser.add_argument("--ds", type=Path, default=None, help="Dataset (LSTM checkpoints)")
        parser.add_argument("--images", type=Path, default=None, help="Image set (CNN checkpoints)")
        parser.add_argument("--pred", type=Path, default=None, help="Predicted positions CSV")
        parser.add_argument("--truth", type=Path, default=None, help="True positions CSV")
        parser.add_argument("--trace-id", type=int, default=None, help="Trace of --truth to use")
        parser.add_argument("--history", type=Path, default=None, help="Attach a history CSV")
        parser.add_argument("--label", default="model", help="Box label")
        parser.add_argument("--report", type=Path, default=None, help="Write the JSON report here")
        parser.add_argument("--boxes", type=Path, default=None, help="Error-box CSV + SVG prefix")

    def handle(self, *args, **options):
        per_epoch = read_history(options["history"]) if options["history"] else None
        if options["pred"] and options["truth"]:
            report = self._from_positions(options)
        elif options["model"]:
            report = self._from_model(options)
        else:
            raise ConfigError("give --model with --ds/--images, or --pred with --truth")
        if per_epoch is not None:
            report = report.model_copy(update={"per_epoch": per_epoch})

        payload = report.model_dump_json(indent=2)
        if options["report"]:
            options["report"].parent.mkdir(parents=True, exist_ok=True)
            options["report"].write_text(payload + "\n", encoding="utf-8")
        else:
            self.stdout.write(payload)
        if options["boxes"]:
            for path in emit_error_boxes({options["label"]: report}, options["boxes"]):
                self.stdout.write(f"  {path}")
        self.stdout.write(
            self.style.SUCCESS(
                f"{report.n_samples} sample(s): mean {report.mean_err_m:.3f} m, "
                f"max {report.max_err_m:.3f} m"
            )
        )

    def _from_positions(self, options) -> EvalReport:
        pred = read_positions(options["pred"])
        truth = read_positions(options["truth"], options["trace_id"])
        return error_stats(pred, truth)

    def _from_model(self, options) -> EvalReport:
        model, meta = load_model(options["model"])
        if isinstance(model, LstmRegressor):
            if not options["ds"]:
                raise ConfigError("LSTM checkpoints are evaluated on --ds")
            _, test, _ = load_dataset(options["ds"])
            return evaluate_lstm(model, test)
        if isinstance(model, CnnClassifier):
            if not options["images"]:
                raise ConfigError("CNN checkpoints are evaluated on --images")
            images, labels, points, _ = load_images(options["images"])
            cfg = build_config(CnnPipelineConfig, **meta.get("train_config", {}))
            _, test_idx = split_samples(len(images), cfg)
            return evaluate_cnn(model, images[test_idx], labels[test_idx], points, cfg.spacing_m)
        raise ConfigError(f"cannot evaluate a {type(model).__name__}")
