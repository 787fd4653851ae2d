"""Single hidden layer perceptron: 25 tanh units, sigmoid output."""

from typing import Tuple

import numpy as np
from pydantic import field_validator, model_validator
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


HIDDEN_UNITS = 25


class MlpModel(FrameClassifier):
    kind = "mlp"

    hidden_weights: np.ndarray
    hidden_bias: np.ndarray
    out_weights: np.ndarray
    out_bias: float = 0.0

    @field_validator("hidden_weights", "hidden_bias", "out_weights", mode="before")
    @classmethod
    def _finite(cls, v, info):
        return require_finite(info.field_name, v)

    @model_validator(mode="after")
    def _shapes(self) -> "MlpModel":
        expected = {
            "hidden_weights": (self.n_features, HIDDEN_UNITS),
            "hidden_bias": (HIDDEN_UNITS,),
            "out_weights": (HIDDEN_UNITS,),
        }
        for name, shape in expected.items():
            actual = getattr(self, name).shape
            if actual != shape:
                raise ValueError(f"{name} has shape {actual}, expected {shape}")
        if not np.isfinite(self.out_bias):
            raise ValueError("out_bias must be finite")
        return self

    @classmethod
    def initial(cls, n_features: int, seed: int) -> "MlpModel":
        """Symmetric uniform initialisation with bound 1/sqrt(fan_in) per layer."""
        rng = np.random.default_rng([seed, 0])
        b_in = 1.0 / np.sqrt(n_features)
        b_out = 1.0 / np.sqrt(HIDDEN_UNITS)
        return cls(
            hidden_weights=rng.uniform(-b_in, b_in, (n_features, HIDDEN_UNITS)),
            hidden_bias=rng.uniform(-b_in, b_in, HIDDEN_UNITS),
            out_weights=rng.uniform(-b_out, b_out, HIDDEN_UNITS),
            out_bias=float(rng.uniform(-b_out, b_out)),
            n_features=n_features,
            seed=seed,
        )

    @classmethod
    def from_parameters(cls, params: Params, seed: int = 0) -> "MlpModel":
        return cls(
            hidden_weights=params["hidden_weights"],
            hidden_bias=params["hidden_bias"],
            out_weights=params["out_weights"],
            out_bias=float(params["out_bias"]),
            n_features=params["hidden_weights"].shape[0],
            seed=seed,
        )

    def parameters(self) -> Params:
        return {
            "hidden_weights": np.array(self.hidden_weights),
            "hidden_bias": np.array(self.hidden_bias),
            "out_weights": np.array(self.out_weights),
            "out_bias": np.array(self.out_bias),
        }

    def _predict(self, features: np.ndarray) -> np.ndarray:
        hidden = np.tanh(features @ self.hidden_weights + self.hidden_bias)
        return expit(hidden @ self.out_weights + self.out_bias)


def mlp_objective(
    params: Params, x: np.ndarray, y: np.ndarray, sample_weight: np.ndarray, l2: float
) -> Tuple[float, Params]:
    """Weighted mean BCE plus ``l2`` times the squared norm of both weight matrices."""
    w1, b1 = params["hidden_weights"], params["hidden_bias"]
    w2, b2 = params["out_weights"], params["out_bias"]
    hidden = np.tanh(x @ w1 + b1)
    z = hidden @ w2 + b2
    m = len(y)
    penalty = np.sum(w1 * w1) + np.dot(w2, w2)
    loss = float(np.sum(sample_weight * bce_terms(z, y)) / m + l2 * penalty)

    dz = sample_weight * (expit(z) - y) / m
    da = np.outer(dz, w2) * (1.0 - hidden * hidden)
    grads = {
        "hidden_weights": x.T @ da + 2.0 * l2 * w1,
        "hidden_bias": da.sum(axis=0),
        "out_weights": hidden.T @ dz + 2.0 * l2 * w2,
        "out_bias": np.array(dz.sum()),
    }
    return loss, grads


def train_mlp(ds: FrameDataset, cfg: TrainConfig = TrainConfig()) -> MlpModel:
    ds.require_both_classes()
    params = MlpModel.initial(ds.features.shape[1], cfg.seed).parameters()
    sw = class_weights(ds.labels, cfg.class_weighting)
    x, y = ds.features, ds.labels.astype(np.float64)

    rng = np.random.default_rng([cfg.seed, 1])
    adam = Adam.from_config(cfg)
    for epoch in range(cfg.epochs):
        for idx in minibatches(rng, len(ds), cfg.batch_size):
            _, grads = mlp_objective(params, x[idx], y[idx], sw[idx], cfg.l2_mlp)
            params = adam.step(params, grads)
        if (epoch + 1) % 5 == 0:
            loss, _ = mlp_objective(params, x, y, sw, cfg.l2_mlp)
            logger.debug(f"mlp epoch {epoch + 1}/{cfg.epochs} loss={loss:.5f}")
    return MlpModel.from_parameters(params, seed=cfg.seed)
