"""Builders shared by the test modules."""

from pathlib import Path
from typing import Iterable, List, Optional, Tuple

import numpy as np

from app.audio.wav import Waveform, write_pcm_wav
from app.corpus.manifest import Manifest, RecordingMeta
from app.models.base import FrameDataset
from app.schema import FEATURE_DIM, TARGET_RATE, Gender, Label, Split


def tone(freq: float = 440.0, ms: float = 100.0, amp: float = 0.5, rate: int = TARGET_RATE) -> Waveform:
    n = int(round(ms * rate / 1000.0))
    t = np.arange(n) / rate
    return Waveform(samples=amp * np.sin(2 * np.pi * freq * t), rate=rate)


def constant(value: float, ms: float, rate: int = TARGET_RATE) -> Waveform:
    n = int(round(ms * rate / 1000.0))
    return Waveform(samples=np.full(n, value), rate=rate)


def concat(*parts: Waveform) -> Waveform:
    return Waveform(samples=np.concatenate([p.samples for p in parts]), rate=parts[0].rate)


def make_meta(
    rec_id: str,
    label: Label,
    fold: Optional[int] = None,
    split: Split = Split.DEV,
    gender: Gender = Gender.UNKNOWN,
    age: Optional[int] = None,
    path: Path = Path("audio/x.wav"),
) -> RecordingMeta:
    return RecordingMeta(
        id=rec_id, audio_path=path, label=label, gender=gender, age=age, fold=fold, split=split
    )


def labelled_manifest(n_pos: int, n_neg: int, split: Split = Split.DEV) -> Manifest:
    entries = [make_meta(f"p{i:03d}", Label.COVID, split=split) for i in range(n_pos)]
    entries += [make_meta(f"n{i:03d}", Label.NON_COVID, split=split) for i in range(n_neg)]
    return Manifest(entries=tuple(entries))


def embed(points, width: int = FEATURE_DIM) -> np.ndarray:
    """Place low-dimensional points in the first columns of a zero matrix."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    out = np.zeros((points.shape[0], width))
    out[:, : points.shape[1]] = points
    return out


def toy_dataset(x, y: Iterable[int]) -> FrameDataset:
    y = np.asarray(list(y))
    return FrameDataset(features=embed(x), labels=y, groups=[f"g{i}" for i in range(len(y))])


def write_toy_corpus(root: Path, items: List[Tuple[str, Label, Waveform]]) -> List[RecordingMeta]:
    metas = []
    for rec_id, label, w in items:
        path = write_pcm_wav(root / "audio" / f"{rec_id}.wav", w)
        metas.append(make_meta(rec_id, label, path=path))
    return metas
