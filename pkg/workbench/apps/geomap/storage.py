"""Map file I/O.

A map file stores the bed geometry and the node values and gradients; the
Clough-Tocher control points are rebuilt on load, so a loaded map answers
queries bit-identically to the one that was saved.
"""

from pathlib import Path
from typing import Union

from apps.core.storage import read_archive, write_archive

from .maps import GeoMap, rasterize
from .schemas import TestBed

MAP_FORMAT = "geomap"
MAP_VERSION = 1


def save_geomap(geomap: GeoMap, path: Union[str, Path]) -> Path:
    header = {
        "bed": geomap.bed.model_dump(),
        "nx": geomap.bed.nx,
        "ny": geomap.bed.ny,
        "components": geomap.components,
        "fine_pitch_m": geomap.fine_grid.pitch_m if geomap.fine_grid else None,
    }
    arrays = {
        "values": geomap.values_grid(),
        "gradients": geomap.gradients_grid(),
    }
    return write_archive(path, MAP_FORMAT, MAP_VERSION, header, arrays)


def load_geomap(path: Union[str, Path]) -> GeoMap:
    header, arrays = read_archive(path, MAP_FORMAT, (MAP_VERSION,))
    bed = TestBed(**header["bed"])
    geomap = GeoMap(bed, arrays["values"], arrays["gradients"])
    if header.get("fine_pitch_m"):
        geomap.fine_grid = rasterize(geomap, float(header["fine_pitch_m"]))
    return geomap

