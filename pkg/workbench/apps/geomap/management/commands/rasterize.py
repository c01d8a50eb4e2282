"""Sample a field map on a regular pitch and emit CSV + SVG heat maps."""

from pathlib import Path

from apps.core.commands import WorkbenchCommand
from apps.geomap.maps import COMPONENTS, rasterize
from apps.geomap.storage import load_geomap
from apps.metrics.plots import emit_raster


class Command(WorkbenchCommand):
    help = "Rasterize a field map (CSV plus one SVG heat map per component)"

    def add_arguments(self, parser):
        parser.add_argument("--map", type=Path, required=True, help="Map file from build-map")
        parser.add_argument("--pitch", type=float, default=0.1, help="Raster pitch in metres")
        parser.add_argument("--out", type=Path, required=True, help="Output CSV")
        parser.add_argument("--no-svg", action="store_true", help="Skip the SVG heat maps")

    def handle(self, *args, **options):
        geomap = load_geomap(options["map"])
        raster = rasterize(geomap, options["pitch"])
        written = emit_raster(
            raster, options["out"], names=COMPONENTS, svg=not options["no_svg"]
        )
        nx, ny = raster.shape_xy
        self.stdout.write(self.style.SUCCESS(f"Raster {nx}x{ny} at {options['pitch']} m"))
        for path in written:
            self.stdout.write(f"  {path}")
