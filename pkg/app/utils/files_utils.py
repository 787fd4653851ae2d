import hashlib
import os
import tempfile
from pathlib import Path
from typing import Union

from app.logger import logger


PathLike = Union[str, Path]


def atomic_write_bytes(filepath: PathLike, data: bytes) -> Path:
    """Write bytes to a file atomically.

    1. Write to temp file in the target directory
    2. fsync
    3. Rename over the target
    """
    target = Path(filepath)
    target.parent.mkdir(parents=True, exist_ok=True)
    temp_name = None
    try:
        with tempfile.NamedTemporaryFile(
            "wb", dir=target.parent, delete=False, suffix=".tmp"
        ) as tf:
            temp_name = tf.name
            tf.write(data)
            tf.flush()
            os.fsync(tf.fileno())
        os.replace(temp_name, target)
        logger.debug(f"Wrote {len(data)} bytes atomically to {target}")
        return target
    except Exception:
        if temp_name and os.path.exists(temp_name):
            os.remove(temp_name)
        raise


def atomic_write_text(filepath: PathLike, text: str) -> Path:
    # LF line endings regardless of platform
    return atomic_write_bytes(filepath, text.encode("utf-8"))


def sha256_file(path: PathLike, chunk_size: int = 1 << 20) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(chunk_size), b""):
            digest.update(chunk)
    return digest.hexdigest()
