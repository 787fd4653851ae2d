"""Threshold-sweep ROC, trapezoidal AUC and operating points.

A recording is predicted positive iff its score is >= the threshold. The
sweep visits every threshold k / 10000 for k = 0..10000.
"""

import io
from pathlib import Path
from typing import Mapping, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.stats import rankdata, sem

from app.eval.scorefile import ScoreFile
from app.exceptions import EvalError
from app.utils.files_utils import PathLike, atomic_write_text


N_STEPS = 10000
THRESHOLDS = np.arange(N_STEPS + 1) / N_STEPS
THRESHOLDS.setflags(write=False)

SENSITIVITY_FLOOR = 0.80
SPECIFICITY_FLOOR = 0.95


class RocCurve(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    thresholds: np.ndarray
    sensitivity: np.ndarray
    specificity: np.ndarray
    n_pos: int = Field(ge=1)
    n_neg: int = Field(ge=1)

    @field_validator("thresholds", "sensitivity", "specificity", mode="before")
    @classmethod
    def _array(cls, v):
        arr = np.array(v, dtype=np.float64)
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def _check(self) -> "RocCurve":
        n = len(self.thresholds)
        if len(self.sensitivity) != n or len(self.specificity) != n:
            raise ValueError("thresholds, sensitivity and specificity must have equal length")
        for name in ("sensitivity", "specificity"):
            arr = getattr(self, name)
            if np.any((arr < 0.0) | (arr > 1.0)):
                raise ValueError(f"{name} outside [0, 1]")
        if np.any(np.diff(self.sensitivity) > 0):
            raise ValueError("sensitivity must not increase with the threshold")
        return self

    @property
    def fpr(self) -> np.ndarray:
        return 1.0 - self.specificity

    def point(self, threshold: float) -> Tuple[float, float]:
        """(sensitivity, specificity) at the sweep threshold nearest ``threshold``."""
        k = int(np.argmin(np.abs(self.thresholds - threshold)))
        return float(self.sensitivity[k]), float(self.specificity[k])


class MetricsReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    auc: float = Field(ge=0.0, le=1.0)
    spec_at_80sens: float = Field(ge=0.0, le=1.0)
    sens_at_95spec: float = Field(ge=0.0, le=1.0)
    n_pos: int = Field(ge=1)
    n_neg: int = Field(ge=1)
    auc_exact: float = Field(ge=0.0, le=1.0, description="Pair-counting AUC, ties count 1/2")


class FoldSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    fold_aucs: Tuple[float, ...]
    mean: float
    std_err: float


def aligned_labels(scores: ScoreFile, labels: Mapping[str, int]) -> Tuple[np.ndarray, np.ndarray]:
    """Scores and 0/1 labels of every scored id, checked for both classes."""
    missing = [i for i in scores.ids if i not in labels]
    if missing:
        shown = ", ".join(missing[:5])
        raise EvalError(
            f"{len(missing)} scored recordings have no label (e.g. {shown})", code="MISSING_LABEL"
        )
    s = scores.values_for(scores.ids)
    y = np.array([int(labels[i]) for i in scores.ids], dtype=np.int64)
    n_pos = int(y.sum())
    if n_pos == 0 or n_pos == len(y):
        raise EvalError(
            f"evaluation needs both classes; got {n_pos} covid of {len(y)}", code="SINGLE_CLASS"
        )
    return s, y


def roc_from_arrays(s: np.ndarray, y: np.ndarray) -> RocCurve:
    pos = np.sort(s[y == 1])
    neg = np.sort(s[y == 0])
    # counts with score >= t are len - (number strictly below t)
    tp = len(pos) - np.searchsorted(pos, THRESHOLDS, side="left")
    tn = np.searchsorted(neg, THRESHOLDS, side="left")
    return RocCurve(
        thresholds=THRESHOLDS,
        sensitivity=tp / len(pos),
        specificity=tn / len(neg),
        n_pos=len(pos),
        n_neg=len(neg),
    )


def roc_curve(scores: ScoreFile, labels: Mapping[str, int]) -> RocCurve:
    return roc_from_arrays(*aligned_labels(scores, labels))


def auc(roc: RocCurve) -> float:
    """Trapezoidal area under TPR vs FPR, closed with (0, 0) and (1, 1)."""
    fpr = np.concatenate([[0.0], roc.fpr[::-1], [1.0]])
    tpr = np.concatenate([[0.0], roc.sensitivity[::-1], [1.0]])
    return float(np.clip(np.trapezoid(tpr, fpr), 0.0, 1.0))


def auc_pairwise(s: Sequence[float], y: Sequence[int]) -> float:
    """Share of (positive, negative) pairs ordered correctly, ties counting 1/2."""
    s = np.asarray(s, dtype=np.float64)
    y = np.asarray(y)
    n_pos = int((y == 1).sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise EvalError("pairwise AUC needs both classes", code="SINGLE_CLASS")
    ranks = rankdata(s, method="average")
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def specificity_at_sensitivity(roc: RocCurve, floor: float = SENSITIVITY_FLOOR) -> float:
    feasible = roc.sensitivity >= floor
    return float(roc.specificity[feasible].max()) if feasible.any() else 0.0


def sensitivity_at_specificity(roc: RocCurve, floor: float = SPECIFICITY_FLOOR) -> float:
    feasible = roc.specificity >= floor
    return float(roc.sensitivity[feasible].max()) if feasible.any() else 0.0


def evaluate(scores: ScoreFile, labels: Mapping[str, int]) -> MetricsReport:
    s, y = aligned_labels(scores, labels)
    roc = roc_from_arrays(s, y)
    return MetricsReport(
        auc=auc(roc),
        spec_at_80sens=specificity_at_sensitivity(roc),
        sens_at_95spec=sensitivity_at_specificity(roc),
        n_pos=roc.n_pos,
        n_neg=roc.n_neg,
        auc_exact=auc_pairwise(s, y),
    )


def summarize_folds(fold_aucs: Sequence[float]) -> FoldSummary:
    """Mean and sample standard error (ddof=1) of per-fold AUCs."""
    values = np.asarray(fold_aucs, dtype=np.float64)
    if len(values) == 0:
        raise EvalError("no fold results to summarise", code="MALFORMED")
    std_err = float(sem(values, ddof=1)) if len(values) > 1 else 0.0
    return FoldSummary(fold_aucs=tuple(float(a) for a in values), mean=float(values.mean()), std_err=std_err)


def format_roc_csv(roc: RocCurve) -> str:
    buf = io.StringIO()
    table = np.column_stack([roc.thresholds, roc.sensitivity, roc.specificity])
    np.savetxt(
        buf,
        table,
        delimiter=",",
        fmt=("%.4f", "%.10f", "%.10f"),
        header="threshold,sensitivity,specificity",
        comments="",
    )
    return buf.getvalue()


def write_roc_csv(roc: RocCurve, path: PathLike) -> Path:
    return atomic_write_text(path, format_roc_csv(roc))
