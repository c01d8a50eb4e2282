"""Annotate traces with map values and build the windowed dataset.

Usage:
    python manage.py make_dataset --traces traces.csv --map map.npz --T 30 --split 0.75 --out ds.npz
"""

from pathlib import Path

from apps.core.commands import WorkbenchCommand
from apps.datasets.sequences import annotate, normalize, windows_from_traces
from apps.datasets.storage import save_dataset
from apps.geomap.storage import load_geomap
from apps.mobility.storage import read_traces


class Command(WorkbenchCommand):
    help = "Build a normalized sliding-window dataset from traces and a field map"

    def add_arguments(self, parser):
        parser.add_argument("--traces", type=Path, required=True, help="Trace CSV")
        parser.add_argument("--map", type=Path, required=True, help="Map file from build-map")
        parser.add_argument("--T", dest="time_steps", type=int, default=30, help="Time steps")
        parser.add_argument("--stride", type=int, default=1, help="Window stride")
        parser.add_argument("--split", type=float, default=0.75, help="Training ratio")
        parser.add_argument("--out", type=Path, required=True, help="Output dataset (.npz)")

    def handle(self, *args, **options):
        geomap = load_geomap(options["map"])
        annotated = [annotate(positions, geomap) for positions in read_traces(options["traces"])]
        windows = windows_from_traces(annotated, options["time_steps"], options["stride"])
        train, test = normalize(windows, options["split"])
        save_dataset(
            train,
            test,
            options["out"],
            meta={
                "stride": options["stride"],
                "split": options["split"],
                "traces": len(annotated),
                "spacing_m": geomap.bed.spacing_m,
            },
        )
        self.stdout.write(
            self.style.SUCCESS(
                f"{train.samples} train / {test.samples} test windows of "
                f"{options['time_steps']} steps -> {options['out']}"
            )
        )
