"""Model checkpoints.

A checkpoint is a ``model`` archive (see apps.core.storage) whose header
holds the model kind, its constructor config, the gate order of LSTM
weights, the parameter names in order with their shapes, and any caller
metadata (normalization, training config). Arrays are the parameters under
their own names.
"""

from pathlib import Path
from typing import Any, Union

from apps.core.exceptions import StorageError
from apps.core.storage import read_archive, write_archive

from .lstm import GATE_ORDER
from .models import CnnClassifier, LstmRegressor

MODEL_FORMAT = "model"
MODEL_VERSION = 1

Model = Union[LstmRegressor, CnnClassifier]
MODEL_KINDS: dict[str, type] = {cls.kind: cls for cls in (LstmRegressor, CnnClassifier)}


def save_model(
    model: Model, path: Union[str, Path], meta: dict[str, Any] | None = None
) -> Path:
    header = {
        "kind": model.kind,
        "gate_order": GATE_ORDER,
        "config": model.config(),
        "params": [[p.name, list(p.value.shape)] for p in model.store],
        "meta": meta or {},
    }
    return write_archive(path, MODEL_FORMAT, MODEL_VERSION, header, model.store.state_dict())


def load_model(path: Union[str, Path]) -> tuple[Model, dict[str, Any]]:
    """Rebuild the model and return it with the caller metadata stored alongside."""
    header, arrays = read_archive(path, MODEL_FORMAT, (MODEL_VERSION,))
    if header.get("gate_order") != GATE_ORDER:
        raise StorageError(
            f"{path}: gate order {header.get('gate_order')!r}, expected {GATE_ORDER!r}"
        )
    try:
        cls = MODEL_KINDS[header["kind"]]
    except KeyError:
        raise StorageError(f"{path}: unknown model kind {header.get('kind')!r}") from None
    model = cls(**header["config"])
    model.store.load_state_dict(arrays)
    return model, header.get("meta", {})
