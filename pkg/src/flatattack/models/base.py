"""Abstract interfaces for differentiable losses and classifiers.

``LossSurface`` is everything the flatness estimators and attacks need: a
scalar loss in x and its input gradient. ``Classifier`` adds logits and
implements the loss as softmax cross-entropy. Single-point evaluation always
goes through the batch path with a batch of one, so a point evaluated alone
and the same point evaluated by ``loss`` agree bit for bit.
"""

from abc import ABC, abstractmethod

import numpy as np
from scipy.special import logsumexp, softmax

from flatattack.errors import DomainError, ShapeError
from flatattack.numerics import FeatureVector


class LossSurface(ABC):
    """A loss L(x, y) that is differentiable in x."""

    @property
    @abstractmethod
    def input_dim(self) -> int:
        ...

    @property
    def is_smooth(self) -> bool:
        """Whether the loss is at least twice continuously differentiable."""
        return True

    @abstractmethod
    def loss_batch(self, X: np.ndarray, y: int) -> np.ndarray:
        """Loss for each row of X against the same label."""
        ...

    @abstractmethod
    def gradient_batch(self, X: np.ndarray, y: int) -> np.ndarray:
        """Input gradient of the loss for each row of X."""
        ...

    def _as_batch(self, x: FeatureVector) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1 or x.shape[0] != self.input_dim:
            raise ShapeError(
                f"expected a vector of dimension {self.input_dim}, got shape {x.shape}",
                expected=self.input_dim,
                actual=x.shape,
            )
        return x[None, :]

    def loss(self, x: FeatureVector, y: int) -> float:
        return float(self.loss_batch(self._as_batch(x), y)[0])

    def input_gradient(self, x: FeatureVector, y: int) -> FeatureVector:
        return self.gradient_batch(self._as_batch(x), y)[0]

    def adversarial_loss(self, x: FeatureVector, y: int) -> float:
        """L^adv = -L. Flatness quantities are all measured on this sign."""
        return -self.loss(x, y)


class Classifier(LossSurface):
    """Softmax classifier with an input vector-Jacobian product."""

    @property
    @abstractmethod
    def num_classes(self) -> int:
        ...

    @abstractmethod
    def logits_batch(self, X: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def vjp(self, X: np.ndarray, dlogits: np.ndarray) -> np.ndarray:
        """Pull per-row logit cotangents back to the inputs."""
        ...

    def _check_label(self, y: int) -> int:
        if not 0 <= int(y) < self.num_classes:
            raise DomainError(
                f"label {y} out of range for {self.num_classes} classes",
                reason="label_range",
            )
        return int(y)

    def logits(self, x: FeatureVector) -> np.ndarray:
        return self.logits_batch(self._as_batch(x))[0]

    def loss_batch(self, X: np.ndarray, y: int) -> np.ndarray:
        y = self._check_label(y)
        z = self.logits_batch(X)
        return cross_entropy(z, np.full(z.shape[0], y))

    def gradient_batch(self, X: np.ndarray, y: int) -> np.ndarray:
        y = self._check_label(y)
        z = self.logits_batch(X)
        return self.vjp(X, cross_entropy_grad(z, np.full(z.shape[0], y)))

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        # argmax returns the first maximum: ties go to the lowest index
        return np.argmax(self.logits_batch(X), axis=1)

    def predict(self, x: FeatureVector) -> int:
        return int(self.predict_batch(self._as_batch(x))[0])


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Per-row softmax cross-entropy, computed as logsumexp(z - z_y)."""
    rows = np.arange(logits.shape[0])
    shifted = logits - logits[rows, labels][:, None]
    return logsumexp(shifted, axis=1)


def cross_entropy_grad(logits: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """d CE / d logits = softmax(z) - onehot(y)."""
    grad = softmax(logits, axis=1)
    grad[np.arange(logits.shape[0]), labels] -= 1.0
    return grad
