"""Min-max score calibration and score-level fusion across systems."""

from typing import Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from app.eval.scorefile import ScoreFile
from app.exceptions import FusionError


class TeamScoreMatrix(BaseModel):
    """Scores of T systems for the same N recordings; column j is system j."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    ids: Tuple[str, ...]
    systems: Tuple[str, ...]
    p: np.ndarray

    @field_validator("p", mode="before")
    @classmethod
    def _matrix(cls, v):
        arr = np.array(v, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError("score matrix must be N x T")
        if not np.all(np.isfinite(arr)) or np.any((arr < 0.0) | (arr > 1.0)):
            raise ValueError("scores must lie in [0, 1]")
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def _shape(self) -> "TeamScoreMatrix":
        if self.p.shape != (len(self.ids), len(self.systems)):
            raise ValueError(
                f"matrix shape {self.p.shape} does not match {len(self.ids)} ids x {len(self.systems)} systems"
            )
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("recording ids must be unique")
        return self

    @property
    def n_systems(self) -> int:
        return len(self.systems)

    @classmethod
    def from_scorefiles(
        cls, scorefiles: Sequence[ScoreFile], systems: Optional[Sequence[str]] = None
    ) -> "TeamScoreMatrix":
        """Align score files on the id order of the first one; id sets must match exactly."""
        if not scorefiles:
            raise FusionError("fusion needs at least one score file", code="ID_MISMATCH")
        systems = tuple(systems) if systems is not None else tuple(f"s{j + 1}" for j in range(len(scorefiles)))
        ids = tuple(scorefiles[0].ids)
        reference = set(ids)
        for name, sf in zip(systems[1:], scorefiles[1:]):
            other = set(sf.ids)
            if other != reference:
                missing = sorted(reference - other)[:3]
                extra = sorted(other - reference)[:3]
                raise FusionError(
                    f"system {name} scores a different id set (missing {missing}, extra {extra})",
                    code="ID_MISMATCH",
                )
        p = np.column_stack([sf.values_for(ids) for sf in scorefiles]) if ids else np.zeros((0, len(scorefiles)))
        return cls(ids=ids, systems=systems, p=p)


class FusedScores(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    ids: Tuple[str, ...]
    values: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def _unit_interval(cls, v):
        arr = np.array(v, dtype=np.float64)
        if np.any((arr < 0.0) | (arr > 1.0)):
            raise ValueError("fused scores must lie in [0, 1]")
        arr.setflags(write=False)
        return arr

    def to_scorefile(self) -> ScoreFile:
        return ScoreFile.from_pairs(zip(self.ids, self.values.tolist()))


def calibrate_minmax(column) -> np.ndarray:
    """(p - min) / (max - min); the minimum maps to 0 and the maximum to 1."""
    column = np.asarray(column, dtype=np.float64)
    if column.size == 0:
        return column.copy()
    lo, hi = column.min(), column.max()
    if hi <= lo:
        raise FusionError(f"cannot calibrate a constant column (all {lo})", code="DEGENERATE_COLUMN")
    return (column - lo) / (hi - lo)


def calibrate_matrix(matrix: TeamScoreMatrix) -> np.ndarray:
    columns = []
    for j, name in enumerate(matrix.systems):
        try:
            columns.append(calibrate_minmax(matrix.p[:, j]))
        except FusionError as e:
            raise FusionError(f"system {name}: {e.message}", code=e.code) from e
    return np.column_stack(columns) if columns else np.zeros_like(matrix.p)


def fuse_mean(matrix: TeamScoreMatrix) -> FusedScores:
    """Arithmetic mean of the calibrated columns."""
    if matrix.n_systems == 0:
        raise FusionError("fusion needs at least one system", code="ID_MISMATCH")
    return FusedScores(ids=matrix.ids, values=calibrate_matrix(matrix).mean(axis=1))


def fuse_weighted(matrix: TeamScoreMatrix, weights: Sequence[float]) -> FusedScores:
    """Convex combination of calibrated columns; weights are normalised to sum to 1."""
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (matrix.n_systems,):
        raise FusionError(
            f"got {w.size} weights for {matrix.n_systems} systems", code="INVALID_WEIGHTS"
        )
    if np.any(w < 0) or not np.isfinite(w).all() or w.sum() <= 0:
        raise FusionError("weights must be finite, non-negative and not all zero", code="INVALID_WEIGHTS")
    fused = calibrate_matrix(matrix) @ (w / w.sum())
    return FusedScores(ids=matrix.ids, values=np.clip(fused, 0.0, 1.0))
