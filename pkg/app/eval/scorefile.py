"""Challenge score files: one ``<id> <score>`` line per recording."""

from pathlib import Path
from typing import Dict, Iterable, List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from app.exceptions import EvalError
from app.utils.files_utils import PathLike, atomic_write_text


SCORE_DECIMALS = 10


class ScoreFile(BaseModel):
    """Recording id -> COVID probability, in file order."""

    model_config = ConfigDict(frozen=True)

    scores: Dict[str, float]

    @field_validator("scores")
    @classmethod
    def _check(cls, v: Dict[str, float]) -> Dict[str, float]:
        for rec_id, score in v.items():
            if not rec_id or any(c.isspace() for c in rec_id):
                raise EvalError(f"invalid recording id {rec_id!r}", code="MALFORMED")
            if not (np.isfinite(score) and 0.0 <= score <= 1.0):
                raise EvalError(f"score {score} for {rec_id} is outside [0, 1]", code="MALFORMED")
        return dict(v)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[str, float]]) -> "ScoreFile":
        scores: Dict[str, float] = {}
        for rec_id, score in pairs:
            if rec_id in scores:
                raise EvalError(f"duplicate recording id {rec_id}", code="MALFORMED")
            scores[rec_id] = float(score)
        return cls(scores=scores)

    def __len__(self) -> int:
        return len(self.scores)

    @property
    def ids(self) -> List[str]:
        return list(self.scores)

    def values_for(self, ids: Iterable[str]) -> np.ndarray:
        return np.array([self.scores[i] for i in ids], dtype=np.float64)

    def subset(self, ids: Iterable[str]) -> "ScoreFile":
        return ScoreFile(scores={i: self.scores[i] for i in ids if i in self.scores})


def parse_scorefile(text: str) -> ScoreFile:
    pairs = []
    seen = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 2:
            raise EvalError(f"line {lineno}: expected '<id> <score>', got {line!r}", code="MALFORMED")
        rec_id, raw = parts
        try:
            score = float(raw)
        except ValueError:
            raise EvalError(f"line {lineno}: score {raw!r} is not a number", code="MALFORMED")
        if not (np.isfinite(score) and 0.0 <= score <= 1.0):
            raise EvalError(f"line {lineno}: score {raw} is outside [0, 1]", code="MALFORMED")
        if rec_id in seen:
            raise EvalError(f"line {lineno}: duplicate recording id {rec_id}", code="MALFORMED")
        seen.add(rec_id)
        pairs.append((rec_id, score))
    return ScoreFile.from_pairs(pairs)


def format_scorefile(scores: ScoreFile) -> str:
    return "".join(f"{rec_id} {score:.{SCORE_DECIMALS}f}\n" for rec_id, score in scores.scores.items())


def read_scorefile(path: PathLike) -> ScoreFile:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as e:
        raise EvalError(f"{path} is not UTF-8 text: {e}", code="MALFORMED") from e
    return parse_scorefile(text)


def write_scorefile(scores: ScoreFile, path: PathLike) -> Path:
    return atomic_write_text(path, format_scorefile(scores))
