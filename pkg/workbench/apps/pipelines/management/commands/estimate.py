"""Estimate a trajectory from a field sequence with a trained LSTM.

Usage:
    python manage.py estimate --model model.npz --geo seq.csv --out path.csv
"""

from pathlib import Path

import numpy as np
import pandas as pd

from apps.core.exceptions import ConfigError
from apps.core.commands import WorkbenchCommand
from apps.datasets.sequences import Normalization
from apps.datasets.storage import read_geo_sequence
from apps.metrics.plots import FLOAT_FORMAT
from apps.neural.checkpoint import load_model
from apps.neural.models import LstmRegressor
from apps.pipelines.lstm import estimate_trajectory


class Command(WorkbenchCommand):
    help = "Predict positions (step, x, y) for a geo_x/geo_y/geo_z sequence"

    def add_arguments(self, parser):
        parser.add_argument("--model", type=Path, required=True, help="Checkpoint from train-lstm")
        parser.add_argument("--geo", type=Path, required=True, help="CSV with geo_x, geo_y, geo_z")
        parser.add_argument(
            "--trace-id", type=int, default=None, help="Trace to use (default: first)"
        )
        parser.add_argument("--out", type=Path, required=True, help="Output positions CSV")

    def handle(self, *args, **options):
        model, meta = load_model(options["model"])
        if not isinstance(model, LstmRegressor) or "normalization" not in meta:
            raise ConfigError(f"{options['model']} is not an LSTM trajectory checkpoint")
        geo = read_geo_sequence(options["geo"], options["trace_id"])
        positions = estimate_trajectory(
            model, Normalization.from_dict(meta["normalization"]), geo, int(meta["time_steps"])
        )
        out = options["out"]
        out.parent.mkdir(parents=True, exist_ok=True)
        pd.DataFrame(
            {"step": np.arange(len(positions)), "x": positions[:, 0], "y": positions[:, 1]}
        ).to_csv(out, index=False, float_format=FLOAT_FORMAT)
        self.stdout.write(self.style.SUCCESS(f"{len(positions)} position(s) -> {out}"))
