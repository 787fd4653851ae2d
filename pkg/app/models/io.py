"""Model files: ``.npz`` archives with a JSON ``meta`` record and named arrays.

Arrays are stored bit-exactly, so a loaded model predicts exactly what the
saved one did.
"""

import io
import json
from pathlib import Path
from typing import Optional

import numpy as np

from app.exceptions import ModelError
from app.models.base import FrameClassifier, TrainConfig
from app.models.lr import LrModel
from app.models.mlp import MlpModel
from app.models.rf import RfModel
from app.utils.files_utils import PathLike, atomic_write_bytes


FORMAT_VERSION = 1
META_KEY = "__meta__"


def save_model(model: FrameClassifier, path: PathLike, cfg: Optional[TrainConfig] = None) -> Path:
    meta = {
        "format_version": FORMAT_VERSION,
        "kind": model.kind,
        "seed": model.seed,
        "n_features": model.n_features,
        "config": cfg.model_dump(mode="json") if cfg is not None else None,
    }
    arrays = model.parameters()
    arrays[META_KEY] = np.frombuffer(json.dumps(meta, sort_keys=True).encode("utf-8"), dtype=np.uint8)
    buf = io.BytesIO()
    np.savez(buf, **arrays)
    return atomic_write_bytes(path, buf.getvalue())


def read_model_meta(path: PathLike) -> dict:
    with np.load(path, allow_pickle=False) as archive:
        return _meta(archive, path)


def _meta(archive, path) -> dict:
    if META_KEY not in archive.files:
        raise ModelError(f"{path} is not a model file (no metadata)", code="MODEL_FORMAT")
    meta = json.loads(archive[META_KEY].tobytes().decode("utf-8"))
    if meta.get("format_version") != FORMAT_VERSION:
        raise ModelError(
            f"{path} has model format version {meta.get('format_version')}, expected {FORMAT_VERSION}",
            code="MODEL_FORMAT",
        )
    return meta


def load_model(path: PathLike) -> FrameClassifier:
    try:
        archive = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as e:
        raise ModelError(f"cannot read model file {path}: {e}", code="MODEL_FORMAT") from e
    with archive:
        meta = _meta(archive, path)
        params = {name: archive[name] for name in archive.files if name != META_KEY}
    kind, seed = meta["kind"], int(meta["seed"])
    try:
        if kind == LrModel.kind:
            return LrModel.from_parameters(params, seed=seed)
        if kind == MlpModel.kind:
            return MlpModel.from_parameters(params, seed=seed)
        if kind == RfModel.kind:
            return RfModel.from_parameters(params, n_features=int(meta["n_features"]), seed=seed)
    except (KeyError, ValueError) as e:
        raise ModelError(f"model file {path} is inconsistent: {e}", code="MODEL_FORMAT") from e
    raise ModelError(f"unknown model kind {kind!r} in {path}", code="MODEL_FORMAT")
