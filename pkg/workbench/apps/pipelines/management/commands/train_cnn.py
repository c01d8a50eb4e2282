"""Train the RSS-image CNN classifier.

Usage:
    python manage.py train_cnn --images images.npz --out cnn.npz --history cnn_history.csv
"""

from pathlib import Path

from apps.core.commands import WorkbenchCommand
from apps.metrics.plots import emit_history
from apps.neural.checkpoint import save_model
from apps.pipelines.cnn import evaluate_cnn, split_samples, train_cnn
from apps.pipelines.schemas import CnnPipelineConfig, SplitMode, load_config
from apps.rss_image.storage import load_images


class Command(WorkbenchCommand):
    help = "Train the CNN reference-point classifier (cross-entropy + Adam)"
    stochastic = True

    def add_arguments(self, parser):
        parser.add_argument(
            "--images", type=Path, required=True, help="Image set from render-images"
        )
        parser.add_argument("--config", type=Path, default=None, help="TOML run configuration")
        parser.add_argument("--out", type=Path, required=True, help="Output checkpoint (.npz)")
        parser.add_argument("--history", type=Path, default=None, help="History CSV (+ SVG)")
        parser.add_argument("--epochs", type=int, default=None)
        parser.add_argument("--batch", dest="batch_size", type=int, default=None)
        parser.add_argument("--lr", type=float, default=None)
        parser.add_argument("--split", type=float, default=None)
        parser.add_argument("--split-mode", choices=[m.value for m in SplitMode], default=None)
        parser.add_argument("--spacing", dest="spacing_m", type=float, default=None)

    def handle(self, *args, **options):
        images, labels, points, _ = load_images(options["images"])
        cfg = load_config(
            CnnPipelineConfig,
            "cnn",
            options["config"],
            epochs=options["epochs"],
            batch_size=options["batch_size"],
            lr=options["lr"],
            split=options["split"],
            split_mode=options["split_mode"],
            spacing_m=options["spacing_m"],
            seed=options["seed"],
        )
        model, history = train_cnn(cfg, images, labels, points)
        save_model(model, options["out"], meta={"train_config": cfg.model_dump(mode="json")})
        if options["history"]:
            for path in emit_history(history, options["history"]):
                self.stdout.write(f"  {path}")

        _, test_idx = split_samples(len(images), cfg)
        report = evaluate_cnn(model, images[test_idx], labels[test_idx], points, cfg.spacing_m)
        self.stdout.write(
            self.style.SUCCESS(
                f"{model.classes} classes, {cfg.epochs} epoch(s), held-out mean error "
                f"{report.mean_err_m:.3f} m -> {options['out']}"
            )
        )
