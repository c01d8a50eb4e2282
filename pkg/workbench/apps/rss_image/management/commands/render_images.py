"""Render every RSS vector of a database as an image for the CNN.

Usage:
    python manage.py render_images --in db.csv --out images.npz
    python manage.py render_images --in db.csv --out images.npz --pgm-dir pgm/ --pgm-count 4
"""

from pathlib import Path

from apps.core.commands import WorkbenchCommand
from apps.fingerprints.parser import parse_database
from apps.fingerprints.selection import select
from apps.rss_image.layout import build_layout, reference_labels, render_many
from apps.rss_image.storage import export_pgm, save_images


class Command(WorkbenchCommand):
    help = "Arrange APs on a centre-out spiral and render RSS images"

    def add_arguments(self, parser):
        parser.add_argument("--in", dest="input", type=Path, required=True, help="Database CSV")
        parser.add_argument("--floor", default=None, help="Use only records of this floor")
        parser.add_argument("--out", type=Path, required=True, help="Output image set (.npz)")
        parser.add_argument("--pgm-dir", type=Path, default=None, help="Export PGM previews here")
        parser.add_argument("--pgm-count", type=int, default=8, help="Number of PGM previews")

    def handle(self, *args, **options):
        with options["input"].open(newline="", encoding="utf-8") as fh:
            db = select(parse_database(fh), floor=options["floor"])

        layout = build_layout(db)
        images = render_many(db.rss_matrix(), layout)
        labels, points = reference_labels(db)
        save_images(images, labels, points, layout, options["out"])
        self.stdout.write(
            self.style.SUCCESS(
                f"{len(images)} image(s) of {layout.side}x{layout.side}, "
                f"{len(points)} reference point(s) -> {options['out']}"
            )
        )

        if options["pgm_dir"]:
            for k in range(min(options["pgm_count"], len(images))):
                path = export_pgm(images[k], options["pgm_dir"] / f"rss_{k:05d}.pgm")
                self.stdout.write(f"  {path}")
