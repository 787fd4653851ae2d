from typing import Tuple

import numpy as np
from pydantic import field_validator
from scipy.special import expit

from app.logger import logger
from app.models.base import (
    Adam,
    FrameClassifier,
    FrameDataset,
    Params,
    TrainConfig,
    bce_terms,
    class_weights,
    minibatches,
    require_finite,
)


class LrModel(FrameClassifier):
    """p(covid | x) = sigmoid(w . x + b)."""

    kind = "lr"

    weights: np.ndarray
    bias: float = 0.0

    @field_validator("weights", mode="before")
    @classmethod
    def _weights(cls, v):
        arr = require_finite("weights", v)
        if arr.ndim != 1:
            raise ValueError("weights must be a vector")
        return arr

    @field_validator("bias")
    @classmethod
    def _bias(cls, v: float) -> float:
        if not np.isfinite(v):
            raise ValueError("bias must be finite")
        return float(v)

    @classmethod
    def zeros(cls, n_features: int, seed: int = 0) -> "LrModel":
        return cls(weights=np.zeros(n_features), bias=0.0, n_features=n_features, seed=seed)

    @classmethod
    def from_parameters(cls, params: Params, seed: int = 0) -> "LrModel":
        w = params["weights"]
        return cls(weights=w, bias=float(params["bias"]), n_features=len(w), seed=seed)

    def parameters(self) -> Params:
        return {"weights": np.array(self.weights), "bias": np.array(self.bias)}

    def _predict(self, features: np.ndarray) -> np.ndarray:
        return expit(features @ self.weights + self.bias)


def lr_objective(
    params: Params, x: np.ndarray, y: np.ndarray, sample_weight: np.ndarray, l2: float
) -> Tuple[float, Params]:
    """Weighted mean BCE plus ``l2 * ||w||^2`` and its gradient.

    The bias is not regularised.
    """
    w, b = params["weights"], params["bias"]
    z = x @ w + b
    m = len(y)
    loss = float(np.sum(sample_weight * bce_terms(z, y)) / m + l2 * np.dot(w, w))
    dz = sample_weight * (expit(z) - y) / m
    grads = {"weights": x.T @ dz + 2.0 * l2 * w, "bias": np.array(dz.sum())}
    return loss, grads


def train_lr(ds: FrameDataset, cfg: TrainConfig = TrainConfig()) -> LrModel:
    ds.require_both_classes()
    n_features = ds.features.shape[1]
    params: Params = LrModel.zeros(n_features).parameters()
    sw = class_weights(ds.labels, cfg.class_weighting)
    x, y = ds.features, ds.labels.astype(np.float64)

    rng = np.random.default_rng(cfg.seed)
    adam = Adam.from_config(cfg)
    for epoch in range(cfg.epochs):
        for idx in minibatches(rng, len(ds), cfg.batch_size):
            _, grads = lr_objective(params, x[idx], y[idx], sw[idx], cfg.l2_lr)
            params = adam.step(params, grads)
        if (epoch + 1) % 5 == 0:
            loss, _ = lr_objective(params, x, y, sw, cfg.l2_lr)
            logger.debug(f"lr epoch {epoch + 1}/{cfg.epochs} loss={loss:.5f}")
    return LrModel.from_parameters(params, seed=cfg.seed)
