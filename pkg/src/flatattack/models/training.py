"""Mini-batch SGD on mean cross-entropy."""

import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from flatattack.errors import ExperimentError, ShapeError
from flatattack.models.base import Classifier
from flatattack.models.dataset import Dataset
from flatattack.models.mlp import Layer, MlpClassifier
from flatattack.numerics import SeededRng

logger = logging.getLogger(__name__)


class TrainConfig(BaseModel):
    """Hyperparameters for plain SGD (no momentum)."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    learning_rate: float = Field(default=0.5, gt=0)
    epochs: int = Field(default=150, ge=0)
    batch_size: int = Field(default=32, gt=0)
    init_seed: int = Field(default=0, ge=0)
    l2_penalty: float = Field(default=1e-4, ge=0)


def accuracy(model: Classifier, dataset: Dataset) -> float:
    if len(dataset) == 0:
        return float("nan")
    return float(np.mean(model.predict_batch(dataset.inputs) == dataset.labels))


def train(model: MlpClassifier, dataset: Dataset, cfg: TrainConfig, rng: SeededRng) -> MlpClassifier:
    """Train a private copy of ``model``; the input model is left untouched.

    Returns:
        A new model carrying its training accuracy.

    Raises:
        ExperimentError: If the dataset is empty.
        ShapeError: If model and dataset disagree on d or C.
    """
    if len(dataset) == 0:
        raise ExperimentError("cannot train on an empty dataset", reason="empty_dataset")
    if dataset.input_dim != model.input_dim or dataset.num_classes != model.num_classes:
        raise ShapeError(
            f"model ({model.input_dim}, {model.num_classes}) does not fit dataset "
            f"({dataset.input_dim}, {dataset.num_classes})",
            expected=(model.input_dim, model.num_classes),
            actual=(dataset.input_dim, dataset.num_classes),
        )

    weights = [layer.weight.copy() for layer in model.layers]
    biases = [layer.bias.copy() for layer in model.layers]
    n = len(dataset)
    # private working copy; its arrays are updated in place
    current = model.with_layers([Layer(w, b) for w, b in zip(weights, biases)])

    for epoch in range(cfg.epochs):
        order = rng.spawn(epoch).permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            batch_loss, grads = current.parameter_gradients(
                dataset.inputs[idx], dataset.labels[idx], cfg.l2_penalty
            )
            epoch_loss += batch_loss * len(idx)
            for i, (d_w, d_b) in enumerate(grads):
                weights[i] -= cfg.learning_rate * d_w
                biases[i] -= cfg.learning_rate * d_b
        if epoch % 50 == 0 or epoch == cfg.epochs - 1:
            logger.debug("%s epoch %d: mean loss %.5f", model.model_id, epoch, epoch_loss / n)

    if not all(np.all(np.isfinite(w)) for w in weights):
        raise ExperimentError(f"training of {model.model_id} diverged", reason="diverged")
    acc = accuracy(current, dataset)
    logger.info("Trained %s for %d epochs: train accuracy %.4f", model.model_id, cfg.epochs, acc)
    return model.with_layers(
        [Layer(w.copy(), b.copy()) for w, b in zip(weights, biases)],
        train_accuracy=acc,
    )
