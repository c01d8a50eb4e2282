"""Sample a field map along traces.

Usage:
    python manage.py annotate --traces traces.csv --map map.npz --out annotated.csv
"""

from pathlib import Path

from apps.core.commands import WorkbenchCommand
from apps.datasets.sequences import annotate
from apps.datasets.storage import write_annotated
from apps.geomap.storage import load_geomap
from apps.mobility.storage import read_traces


class Command(WorkbenchCommand):
    help = "Write trace positions with the interpolated field at every step"

    def add_arguments(self, parser):
        parser.add_argument("--traces", type=Path, required=True, help="Trace CSV")
        parser.add_argument("--map", type=Path, required=True, help="Map file from build-map")
        parser.add_argument("--out", type=Path, required=True, help="Output CSV")

    def handle(self, *args, **options):
        geomap = load_geomap(options["map"])
        annotated = [annotate(positions, geomap) for positions in read_traces(options["traces"])]
        write_annotated(annotated, options["out"])
        self.stdout.write(
            self.style.SUCCESS(f"Annotated {len(annotated)} trace(s) -> {options['out']}")
        )
