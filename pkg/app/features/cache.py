import hashlib
import io
import json
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from pydantic import BaseModel

from app.exceptions import AudioFormatError
from app.features.mfcc import FeatureMatrix
from app.logger import logger
from app.utils.files_utils import PathLike, atomic_write_bytes, atomic_write_text, sha256_file


class FeatureCache:
    """Feature matrices on disk, keyed by content hash of (audio bytes, configs).

    A cache hit returns exactly the array that was stored, so caching never
    changes results.
    """

    def __init__(self, cache_dir: PathLike):
        self.cache_dir = Path(cache_dir)
        self.hits = 0
        self.misses = 0

    @staticmethod
    def key(audio_sha256: str, *configs: BaseModel) -> str:
        digest = hashlib.sha256(audio_sha256.encode())
        for cfg in configs:
            payload = json.dumps(cfg.model_dump(mode="json"), sort_keys=True)
            digest.update(type(cfg).__name__.encode())
            digest.update(payload.encode())
        return digest.hexdigest()

    def path_for(self, key: str) -> Path:
        return self.cache_dir / f"{key}.npy"

    def get(self, key: str) -> Optional[np.ndarray]:
        path = self.path_for(key)
        if not path.exists():
            return None
        try:
            return np.load(path, allow_pickle=False)
        except (OSError, ValueError) as e:
            logger.warning(f"Ignoring unreadable cache entry {path}: {e}")
            return None

    def put(self, key: str, rows: np.ndarray) -> Path:
        buf = io.BytesIO()
        np.save(buf, np.ascontiguousarray(rows), allow_pickle=False)
        return atomic_write_bytes(self.path_for(key), buf.getvalue())

    def get_or_compute(
        self,
        audio_path: PathLike,
        compute: Callable[[], FeatureMatrix],
        recording_id: str,
        *configs: BaseModel,
    ) -> FeatureMatrix:
        try:
            audio_sha256 = sha256_file(audio_path)
        except OSError as e:
            raise AudioFormatError(f"cannot read {audio_path}: {e}", code="IO") from None
        key = self.key(audio_sha256, *configs)
        rows = self.get(key)
        if rows is not None:
            self.hits += 1
            return FeatureMatrix(rows=rows, recording_id=recording_id)
        self.misses += 1
        features = compute()
        self.put(key, features.rows)
        return features


def write_feature_csv(features: FeatureMatrix, out_dir: PathLike) -> Path:
    """One row per frame, no header; the recording id names the file."""
    buf = io.StringIO()
    np.savetxt(buf, features.rows, delimiter=",", fmt="%.10g")
    return atomic_write_text(Path(out_dir) / f"{features.recording_id}.csv", buf.getvalue())


def read_feature_csv(path: PathLike) -> FeatureMatrix:
    path = Path(path)
    rows = np.loadtxt(path, delimiter=",", ndmin=2)
    return FeatureMatrix(rows=rows, recording_id=path.stem)
