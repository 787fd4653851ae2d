from abc import ABC, abstractmethod
from typing import ClassVar, Dict, Iterator, List, Literal, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.exceptions import ModelError
from app.schema import FEATURE_DIM


Params = Dict[str, np.ndarray]


class TrainConfig(BaseModel):
    """Training hyper-parameters shared by the three classifiers."""

    model_config = ConfigDict(frozen=True)

    epochs: int = Field(25, gt=0)
    learning_rate: float = Field(0.001, gt=0.0, description="Adam step size")
    beta1: float = Field(0.9, ge=0.0, lt=1.0)
    beta2: float = Field(0.999, ge=0.0, lt=1.0)
    eps: float = Field(1e-8, gt=0.0)
    l2_lr: float = Field(0.01, ge=0.0, description="L2 strength for logistic regression")
    l2_mlp: float = Field(0.001, ge=0.0, description="L2 strength for the perceptron")
    class_weighting: Literal["inverse_frequency", "none"] = "inverse_frequency"
    batch_size: int = Field(256, gt=0, description="Frames per mini-batch")
    n_trees: int = Field(50, gt=0)
    seed: int = 7


class FrameDataset(BaseModel):
    """Frame-level training data; every frame inherits its recording's label."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    features: np.ndarray
    labels: np.ndarray
    groups: np.ndarray

    @field_validator("features", mode="before")
    @classmethod
    def _features(cls, v):
        arr = np.array(v, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise ValueError(f"features must be a non-empty M x d array, got {arr.shape}")
        return arr

    @field_validator("labels", mode="before")
    @classmethod
    def _labels(cls, v):
        arr = np.array(v, dtype=np.int64)
        if not np.isin(arr, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")
        return arr

    @field_validator("groups", mode="before")
    @classmethod
    def _groups(cls, v):
        return np.array(v, dtype=object)

    def __len__(self) -> int:
        return int(self.features.shape[0])

    @classmethod
    def from_recordings(cls, items: Sequence[Tuple[str, np.ndarray, int]]) -> "FrameDataset":
        """Stack (recording_id, T x d rows, label) triples."""
        if not items:
            raise ModelError("no recordings to build a dataset from", code="EMPTY_FEATURES")
        feats: List[np.ndarray] = [rows for _, rows, _ in items]
        labels = np.concatenate([np.full(len(rows), label) for _, rows, label in items])
        groups = np.concatenate([np.full(len(rows), rid, dtype=object) for rid, rows, _ in items])
        return cls(features=np.vstack(feats), labels=labels, groups=groups)

    def require_both_classes(self) -> None:
        n_pos = int(self.labels.sum())
        if n_pos == 0 or n_pos == len(self):
            only = "covid" if n_pos else "non_covid"
            raise ModelError(
                f"training data holds only {only} frames; both classes are required",
                code="SINGLE_CLASS",
            )


def class_weights(labels: np.ndarray, scheme: str = "inverse_frequency") -> np.ndarray:
    """Per-sample weights M / (2 * n_class), or ones when unweighted."""
    labels = np.asarray(labels)
    if scheme == "none":
        return np.ones(len(labels))
    m = len(labels)
    n_pos = labels.sum()
    n_neg = m - n_pos
    w_pos = m / (2.0 * n_pos) if n_pos else 0.0
    w_neg = m / (2.0 * n_neg) if n_neg else 0.0
    return np.where(labels == 1, w_pos, w_neg)


def minibatches(rng: np.random.Generator, n: int, batch_size: int) -> Iterator[np.ndarray]:
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]


class Adam:
    """Adaptive-moment gradient steps over a dict of parameter arrays."""

    def __init__(self, lr: float = 0.001, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m: Params = {}
        self._v: Params = {}

    @classmethod
    def from_config(cls, cfg: TrainConfig) -> "Adam":
        return cls(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)

    def step(self, params: Params, grads: Params) -> Params:
        self.t += 1
        updated: Params = {}
        for name, value in params.items():
            g = grads[name]
            m = self.beta1 * self._m.get(name, np.zeros_like(g)) + (1 - self.beta1) * g
            v = self.beta2 * self._v.get(name, np.zeros_like(g)) + (1 - self.beta2) * g * g
            self._m[name], self._v[name] = m, v
            m_hat = m / (1 - self.beta1**self.t)
            v_hat = v / (1 - self.beta2**self.t)
            updated[name] = value - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
        return updated


def bce_terms(z: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Per-sample binary cross entropy of logits ``z``, computed stably."""
    return np.logaddexp(0.0, z) - y * z


class FrameClassifier(BaseModel, ABC):
    """A trained frame-level classifier emitting positive-class probabilities."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    kind: ClassVar[str]
    seed: int = 0
    n_features: int = FEATURE_DIM

    @abstractmethod
    def _predict(self, features: np.ndarray) -> np.ndarray:
        """Probabilities for a validated (T, n_features) array"""

    @abstractmethod
    def parameters(self) -> Params:
        """Named parameter arrays, as persisted in model files"""

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        features = np.atleast_2d(np.asarray(features, dtype=np.float64))
        if features.shape[1] != self.n_features:
            raise ModelError(
                f"{self.kind} model expects {self.n_features} feature columns, got {features.shape[1]}",
                code="WIDTH_MISMATCH",
            )
        return self._predict(features)


def require_finite(name: str, value: np.ndarray) -> np.ndarray:
    arr = np.array(value, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    arr.setflags(write=False)
    return arr
