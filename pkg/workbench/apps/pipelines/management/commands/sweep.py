"""Hidden-node study over a grid of LSTM widths and seeds.

Usage:
    python manage.py sweep --ds ds.npz --hidden 128 512 --seeds 1 2 3 --out sweep
"""

from pathlib import Path

from apps.core.commands import WorkbenchCommand
from apps.datasets.storage import load_dataset
from apps.metrics.plots import emit_error_boxes
from apps.pipelines.schemas import LstmPipelineConfig, load_config
from apps.pipelines.sweep import sweep_hidden


class Command(WorkbenchCommand):
    help = "Train and evaluate one LSTM per (hidden size, seed); emit error boxes"

    def add_arguments(self, parser):
        parser.add_argument("--ds", type=Path, required=True, help="Dataset from make-dataset")
        parser.add_argument("--config", type=Path, default=None, help="TOML run configuration")
        parser.add_argument("--hidden", type=int, nargs="+", required=True, help="Hidden sizes")
        parser.add_argument("--seeds", type=int, nargs="+", required=True, help="Seeds per size")
        parser.add_argument("--epochs", type=int, default=None)
        parser.add_argument("--out", type=Path, required=True, help="Output prefix (CSV + SVG)")

    def handle(self, *args, **options):
        train, test, header = load_dataset(options["ds"])
        cfg = load_config(
            LstmPipelineConfig,
            "lstm",
            options["config"],
            defaults={
                "time_steps": train.time_steps,
                "split": header.get("split", 0.75),
                "spacing_m": header.get("spacing_m", 0.6),
            },
            epochs=options["epochs"],
        )
        reports = sweep_hidden(cfg, train, test, options["hidden"], options["seeds"])
        labelled = {
            f"h{hidden}/s{seed}": report
            for hidden, by_seed in reports.items()
            for seed, report in by_seed.items()
        }
        for label, report in labelled.items():
            self.stdout.write(
                f"{label}: mean {report.mean_err_m:.3f} m, max {report.max_err_m:.3f} m"
            )
        for path in emit_error_boxes(labelled, options["out"]):
            self.stdout.write(f"  {path}")
        self.stdout.write(self.style.SUCCESS(f"{len(labelled)} run(s) finished"))
