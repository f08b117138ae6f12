"""Differentiable classifiers playing surrogate and target."""

from flatattack.models.base import Classifier, LossSurface
from flatattack.models.dataset import Dataset, load_dataset, save_dataset
from flatattack.models.ensemble import EnsembleClassifier, ensemble_logits
from flatattack.models.gradcheck import fd_gradient_oracle, relative_error
from flatattack.models.mlp import (
    Activation,
    Layer,
    MlpClassifier,
    forward,
    input_gradient,
    loss,
    predict,
)
from flatattack.models.serialization import load_model, model_hash, save_model
from flatattack.models.training import TrainConfig, accuracy, train

__all__ = [
    "Activation",
    "Classifier",
    "Dataset",
    "EnsembleClassifier",
    "Layer",
    "LossSurface",
    "MlpClassifier",
    "TrainConfig",
    "accuracy",
    "ensemble_logits",
    "fd_gradient_oracle",
    "forward",
    "input_gradient",
    "load_dataset",
    "load_model",
    "loss",
    "model_hash",
    "predict",
    "relative_error",
    "save_dataset",
    "save_model",
    "train",
]
