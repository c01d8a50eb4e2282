"""Build the geomagnetic field map of a test bed from a fingerprint CSV.

Usage:
    python manage.py build_map --in db.csv --bed 30x7.2 --out map.npz
    python manage.py build_map --in db.csv --bed 30x3 --floor 5E --direction North --out map.npz
"""

from pathlib import Path

from apps.core.commands import WorkbenchCommand
from apps.fingerprints.parser import parse_database
from apps.fingerprints.schemas import Direction
from apps.geomap.maps import build_geomap
from apps.geomap.schemas import TestBed
from apps.geomap.storage import save_geomap


class Command(WorkbenchCommand):
    help = "Build a Clough-Tocher field map from grid reference points"

    def add_arguments(self, parser):
        parser.add_argument("--in", dest="input", type=Path, required=True, help="Database CSV")
        parser.add_argument("--bed", required=True, help="WIDTHxHEIGHT in metres, e.g. 30x7.2")
        parser.add_argument("--spacing", type=float, default=0.6, help="Grid pitch in metres")
        parser.add_argument("--floor", default=None, help="Use only records of this floor")
        parser.add_argument(
            "--direction",
            choices=[d.value for d in Direction],
            default=None,
            help="Use only records taken at this heading (default: average all)",
        )
        parser.add_argument(
            "--fine-pitch", type=float, default=None, help="Cache a raster at this pitch (m)"
        )
        parser.add_argument("--out", type=Path, required=True, help="Output map file (.npz)")

    def handle(self, *args, **options):
        bed = TestBed.parse(options["bed"], options["spacing"])
        with options["input"].open(newline="", encoding="utf-8") as fh:
            db = parse_database(fh, spacing_m=options["spacing"])

        direction = Direction(options["direction"]) if options["direction"] else None
        geomap = build_geomap(
            db,
            bed,
            floor=options["floor"],
            direction=direction,
            fine_pitch_m=options["fine_pitch"],
        )
        save_geomap(geomap, options["out"])
        self.stdout.write(
            self.style.SUCCESS(
                f"Map of {bed.label()} m: {bed.node_count} nodes, "
                f"{len(geomap.triangles)} triangles -> {options['out']}"
            )
        )
