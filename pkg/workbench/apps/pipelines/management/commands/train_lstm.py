"""Train the LSTM trajectory estimator on a windowed dataset.

Usage:
    python manage.py train_lstm --ds ds.npz --config run.toml --out model.npz --history history.csv

Config precedence: dataset header (time_steps, split, spacing), then the
``[lstm]`` table of ``--config``, then explicit flags. ``--seed`` always wins.
"""

from pathlib import Path

from apps.core.commands import WorkbenchCommand
from apps.datasets.storage import load_dataset
from apps.metrics.plots import emit_history
from apps.neural.checkpoint import save_model
from apps.pipelines.lstm import evaluate_lstm, train_lstm
from apps.pipelines.schemas import LstmPipelineConfig, load_config


class Command(WorkbenchCommand):
    help = "Train the stacked LSTM (stateful, MSE + Adam) and save a checkpoint"
    stochastic = True

    def add_arguments(self, parser):
        parser.add_argument("--ds", type=Path, required=True, help="Dataset from make-dataset")
        parser.add_argument("--config", type=Path, default=None, help="TOML run configuration")
        parser.add_argument("--out", type=Path, required=True, help="Output checkpoint (.npz)")
        parser.add_argument("--history", type=Path, default=None, help="History CSV (+ SVG)")
        parser.add_argument("--epochs", type=int, default=None)
        parser.add_argument("--hidden", type=int, default=None)
        parser.add_argument("--batch", dest="batch_size", type=int, default=None)
        parser.add_argument("--dropout", type=float, default=None)
        parser.add_argument("--lr", type=float, default=None)

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
            hidden=options["hidden"],
            batch_size=options["batch_size"],
            dropout=options["dropout"],
            lr=options["lr"],
            seed=options["seed"],
        )
        model, history = train_lstm(cfg, train, test)
        save_model(
            model,
            options["out"],
            meta={
                "time_steps": cfg.time_steps,
                "normalization": train.norm.to_dict(),
                "train_config": cfg.model_dump(mode="json"),
            },
        )
        if options["history"]:
            for path in emit_history(history, options["history"]):
                self.stdout.write(f"  {path}")

        report = evaluate_lstm(model, test)
        self.stdout.write(
            self.style.SUCCESS(
                f"{cfg.epochs} epoch(s), held-out mean error {report.mean_err_m:.3f} m "
                f"-> {options['out']}"
            )
        )
