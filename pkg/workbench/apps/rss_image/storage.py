"""Image-set files and PGM export."""

from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image

from apps.core.storage import read_archive, write_archive

from .layout import ApLayout

IMAGES_FORMAT = "rss-images"
IMAGES_VERSION = 1


def save_images(
    images: np.ndarray,
    labels: np.ndarray,
    points: np.ndarray,
    layout: ApLayout,
    path: Union[str, Path],
) -> Path:
    """
    Arrays: images (N, side, side), labels (N,), points (classes, 2) grid
    indices of each class, placement (ap_count, 2), ranking (ap_count,).
    """
    header = {
        "side": layout.side,
        "samples": int(len(images)),
        "classes": int(len(points)),
        "fill": layout.fill,
    }
    arrays = {
        "images": images,
        "labels": labels.astype(np.int64),
        "points": points.astype(np.int64),
        "placement": layout.placement,
        "ranking": layout.ranking,
    }
    return write_archive(path, IMAGES_FORMAT, IMAGES_VERSION, header, arrays)


def load_images(path: Union[str, Path]) -> tuple[np.ndarray, np.ndarray, np.ndarray, ApLayout]:
    header, arrays = read_archive(path, IMAGES_FORMAT, (IMAGES_VERSION,))
    layout = ApLayout(
        side=int(header["side"]),
        placement=arrays["placement"],
        ranking=arrays["ranking"],
        fill=float(header["fill"]),
    )
    return arrays["images"], arrays["labels"], arrays["points"], layout


def export_pgm(image: np.ndarray, path: Union[str, Path], scale: int = 8) -> Path:
    """Write one [0, 1] image as an 8-bit PGM, each pixel blown up to scale x scale."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pixels = np.rint(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)
    picture = Image.fromarray(pixels)
    if scale > 1:
        picture = picture.resize(
            (pixels.shape[1] * scale, pixels.shape[0] * scale), Image.Resampling.NEAREST
        )
    picture.save(path, format="PPM")
    return path
