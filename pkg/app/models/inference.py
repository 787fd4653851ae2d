from typing import Sequence

import numpy as np

from app.exceptions import ModelError
from app.models.base import FrameClassifier


def predict_frame_scores(model: FrameClassifier, features: np.ndarray) -> np.ndarray:
    """Positive-class probability for every frame row."""
    return model.predict_proba(features)


def score_recording(model: FrameClassifier, features: np.ndarray) -> float:
    """Mean frame probability of one recording."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] == 0:
        raise ModelError("recording has no feature frames", code="EMPTY_FEATURES")
    return float(np.mean(predict_frame_scores(model, features)))


def ensemble_score(models: Sequence[FrameClassifier], features: np.ndarray) -> float:
    """Mean over fold models of their recording scores.

    Raw probabilities are averaged; no per-model normalisation is applied.
    """
    if not models:
        raise ModelError("no models to ensemble", code="EMPTY_MODELS")
    kinds = {m.kind for m in models}
    if len(kinds) > 1:
        raise ModelError(f"cannot ensemble mixed model kinds {sorted(kinds)}", code="MIXED_KINDS")
    return float(np.mean([score_recording(m, features) for m in models]))
