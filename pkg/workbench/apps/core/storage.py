"""Versioned ``.npz`` artifact files.

Every binary artifact (map, dataset, model, image set) is a numpy ``.npz``
archive with a ``header`` entry holding a JSON document::

    {"format": "<kind>", "version": <int>, ...kind specific keys...}

and one entry per array, stored row-major (C order) as float64 / int64.
"""

import json
import logging
from pathlib import Path
from typing import Any, Union

import numpy as np

from .exceptions import StorageError

logger = logging.getLogger(__name__)

HEADER_KEY = "header"

PathLike = Union[str, Path]


def write_archive(
    path: PathLike,
    kind: str,
    version: int,
    header: dict[str, Any],
    arrays: dict[str, np.ndarray],
) -> Path:
    """Write ``arrays`` plus a JSON header to ``path`` (exact path, no suffix added)."""
    path = Path(path)
    if HEADER_KEY in arrays:
        raise StorageError(f"array name '{HEADER_KEY}' is reserved")
    document = {"format": kind, "version": version, **header}
    payload = {name: np.ascontiguousarray(value) for name, value in arrays.items()}
    payload[HEADER_KEY] = np.array(json.dumps(document, sort_keys=True))
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as fh:
        np.savez(fh, **payload)
    logger.debug("Wrote %s v%d to %s", kind, version, path)
    return path


def read_archive(
    path: PathLike, kind: str, versions: tuple[int, ...]
) -> tuple[dict[str, Any], dict[str, np.ndarray]]:
    """Read an archive written by :func:`write_archive`, checking kind and version."""
    path = Path(path)
    if not path.is_file():
        raise StorageError(f"{kind} file not found: {path}", details={"path": str(path)})
    try:
        with np.load(path, allow_pickle=False) as archive:
            arrays = {name: archive[name] for name in archive.files}
    except (OSError, ValueError) as exc:
        raise StorageError(f"cannot read {kind} file {path}: {exc}") from exc

    if HEADER_KEY not in arrays:
        raise StorageError(f"{path} has no header entry")
    header = json.loads(str(arrays.pop(HEADER_KEY)))
    if header.get("format") != kind:
        raise StorageError(
            f"{path} holds '{header.get('format')}', expected '{kind}'",
            details={"path": str(path)},
        )
    if header.get("version") not in versions:
        raise StorageError(
            f"{path}: unsupported {kind} version {header.get('version')}",
            details={"supported": list(versions)},
        )
    return header, arrays
