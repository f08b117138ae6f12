"""Logit-averaging ensemble that behaves as a single classifier."""

import logging
from typing import Sequence

import numpy as np

from flatattack.errors import ShapeError
from flatattack.models.base import Classifier
from flatattack.numerics import FeatureVector

logger = logging.getLogger(__name__)


class EnsembleClassifier(Classifier):
    """Arithmetic mean of member logits.

    Loss and input gradient are taken through the averaged logits, so for
    cross-entropy the gradient is not the mean of member gradients.
    """

    def __init__(self, members: Sequence[Classifier]):
        if not members:
            raise ShapeError("an ensemble needs at least one member")
        first = members[0]
        for m in members[1:]:
            if m.input_dim != first.input_dim or m.num_classes != first.num_classes:
                raise ShapeError(
                    "ensemble members disagree on shape: "
                    f"({first.input_dim}, {first.num_classes}) vs ({m.input_dim}, {m.num_classes})",
                    expected=(first.input_dim, first.num_classes),
                    actual=(m.input_dim, m.num_classes),
                )
        self.members = list(members)

    @property
    def model_id(self) -> str:
        return "+".join(getattr(m, "model_id", "?") for m in self.members)

    @property
    def input_dim(self) -> int:
        return self.members[0].input_dim

    @property
    def num_classes(self) -> int:
        return self.members[0].num_classes

    @property
    def is_smooth(self) -> bool:
        return all(m.is_smooth for m in self.members)

    def logits_batch(self, X: np.ndarray) -> np.ndarray:
        if len(self.members) == 1:
            return self.members[0].logits_batch(X)
        return np.mean([m.logits_batch(X) for m in self.members], axis=0)

    def vjp(self, X: np.ndarray, dlogits: np.ndarray) -> np.ndarray:
        if len(self.members) == 1:
            return self.members[0].vjp(X, dlogits)
        return np.sum([m.vjp(X, dlogits) for m in self.members], axis=0) / len(self.members)

    # An ensemble of one is its member, evaluation path included.

    def loss_batch(self, X: np.ndarray, y: int) -> np.ndarray:
        if len(self.members) == 1:
            return self.members[0].loss_batch(X, y)
        return super().loss_batch(X, y)

    def gradient_batch(self, X: np.ndarray, y: int) -> np.ndarray:
        if len(self.members) == 1:
            return self.members[0].gradient_batch(X, y)
        return super().gradient_batch(X, y)


def ensemble_logits(models: Sequence[Classifier], x: FeatureVector) -> np.ndarray:
    """Mean of member logits for a single input."""
    return EnsembleClassifier(models).logits(x)
