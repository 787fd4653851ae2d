from app.models.base import Adam, FrameClassifier, FrameDataset, TrainConfig, class_weights
from app.models.inference import ensemble_score, predict_frame_scores, score_recording
from app.models.io import load_model, read_model_meta, save_model
from app.models.lr import LrModel, lr_objective, train_lr
from app.models.mlp import HIDDEN_UNITS, MlpModel, mlp_objective, train_mlp
from app.models.rf import DecisionTree, RfModel, gini_impurity, train_rf
from app.schema import ModelKind


TRAINERS = {
    ModelKind.LR: train_lr,
    ModelKind.MLP: train_mlp,
    ModelKind.RF: train_rf,
}


def train_model(kind: ModelKind, ds: FrameDataset, cfg: TrainConfig = TrainConfig()) -> FrameClassifier:
    return TRAINERS[ModelKind(kind)](ds, cfg)


__all__ = [
    "Adam",
    "DecisionTree",
    "FrameClassifier",
    "FrameDataset",
    "HIDDEN_UNITS",
    "LrModel",
    "MlpModel",
    "RfModel",
    "TrainConfig",
    "TRAINERS",
    "class_weights",
    "ensemble_score",
    "gini_impurity",
    "load_model",
    "lr_objective",
    "mlp_objective",
    "predict_frame_scores",
    "read_model_meta",
    "save_model",
    "score_recording",
    "train_lr",
    "train_mlp",
    "train_model",
    "train_rf",
]
