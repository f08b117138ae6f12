"""Feedforward softmax classifier with analytic forward and backward passes.

Hidden layers apply the model's activation; the last layer is affine and
produces logits. A model with a single layer is a linear classifier.
"""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy.special import expit

from flatattack.errors import ShapeError
from flatattack.models.base import Classifier, cross_entropy, cross_entropy_grad
from flatattack.numerics import FeatureVector, SeededRng

logger = logging.getLogger(__name__)


class Activation(str, Enum):
    TANH = "tanh"
    SOFTPLUS = "softplus"
    RELU = "relu"

    def apply(self, z: np.ndarray) -> np.ndarray:
        if self is Activation.TANH:
            return np.tanh(z)
        if self is Activation.SOFTPLUS:
            return np.logaddexp(0.0, z)
        return np.maximum(z, 0.0)

    def derivative(self, z: np.ndarray) -> np.ndarray:
        if self is Activation.TANH:
            t = np.tanh(z)
            return 1.0 - t * t
        if self is Activation.SOFTPLUS:
            return expit(z)
        return (z > 0.0).astype(np.float64)


@dataclass(frozen=True)
class Layer:
    """Affine map z = W h + b; weight has shape (out, in)."""

    weight: np.ndarray
    bias: np.ndarray

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]


@dataclass(frozen=True, eq=False)
class MlpClassifier(Classifier):
    """Small MLP playing the surrogate or target model.

    Instances are treated as immutable: training returns a new model.
    """

    layers: tuple[Layer, ...]
    activation: Activation = Activation.TANH
    model_id: str = "model"
    train_accuracy: Optional[float] = field(default=None)

    def __post_init__(self):
        if not self.layers:
            raise ShapeError("an MLP needs at least one layer")
        for i, layer in enumerate(self.layers):
            if layer.weight.ndim != 2 or layer.bias.shape != (layer.out_dim,):
                raise ShapeError(
                    f"layer {i}: bias shape {layer.bias.shape} does not match weight {layer.weight.shape}",
                    expected=(layer.out_dim,),
                    actual=layer.bias.shape,
                )
            if i > 0 and layer.in_dim != self.layers[i - 1].out_dim:
                raise ShapeError(
                    f"layer {i} expects {layer.in_dim} inputs but layer {i - 1} emits {self.layers[i - 1].out_dim}",
                    expected=self.layers[i - 1].out_dim,
                    actual=layer.in_dim,
                )
            if not (np.all(np.isfinite(layer.weight)) and np.all(np.isfinite(layer.bias))):
                raise ShapeError(f"layer {i} has non-finite parameters")

    @classmethod
    def initialize(
        cls,
        input_dim: int,
        num_classes: int,
        hidden: Sequence[int],
        activation: Activation | str,
        model_id: str,
        rng: SeededRng,
    ) -> "MlpClassifier":
        """Glorot-normal weights, zero biases."""
        sizes = [input_dim, *hidden, num_classes]
        layers = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            std = np.sqrt(2.0 / (fan_in + fan_out))
            layers.append(
                Layer(
                    weight=rng.normal((fan_out, fan_in), scale=std),
                    bias=np.zeros(fan_out),
                )
            )
        return cls(layers=tuple(layers), activation=Activation(activation), model_id=model_id)

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def num_classes(self) -> int:
        return self.layers[-1].out_dim

    @property
    def is_smooth(self) -> bool:
        return self.activation is not Activation.RELU or len(self.layers) == 1

    @property
    def hidden_sizes(self) -> tuple[int, ...]:
        return tuple(layer.out_dim for layer in self.layers[:-1])

    def with_layers(self, layers: Sequence[Layer], train_accuracy: Optional[float] = None) -> "MlpClassifier":
        return replace(self, layers=tuple(layers), train_accuracy=train_accuracy)

    # -- forward / backward --------------------------------------------------

    def _check_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.input_dim:
            raise ShapeError(
                f"expected inputs with {self.input_dim} features, got shape {X.shape}",
                expected=self.input_dim,
                actual=X.shape,
            )
        return X

    def _forward(self, X: np.ndarray) -> tuple[np.ndarray, list[np.ndarray], list[np.ndarray]]:
        """Return logits plus per-layer inputs and hidden pre-activations."""
        h = self._check_batch(X)
        inputs: list[np.ndarray] = []
        pre: list[np.ndarray] = []
        last = len(self.layers) - 1
        for i, layer in enumerate(self.layers):
            inputs.append(h)
            z = h @ layer.weight.T + layer.bias
            if i == last:
                return z, inputs, pre
            pre.append(z)
            h = self.activation.apply(z)
        raise AssertionError("unreachable")

    def _backward(self, pre: list[np.ndarray], dlogits: np.ndarray) -> np.ndarray:
        delta = dlogits
        for i in range(len(self.layers) - 1, -1, -1):
            grad_in = delta @ self.layers[i].weight
            if i == 0:
                return grad_in
            delta = grad_in * self.activation.derivative(pre[i - 1])
        raise AssertionError("unreachable")

    def logits_batch(self, X: np.ndarray) -> np.ndarray:
        return self._forward(X)[0]

    def vjp(self, X: np.ndarray, dlogits: np.ndarray) -> np.ndarray:
        _, _, pre = self._forward(X)
        return self._backward(pre, dlogits)

    def gradient_batch(self, X: np.ndarray, y: int) -> np.ndarray:
        y = self._check_label(y)
        z, _, pre = self._forward(X)
        return self._backward(pre, cross_entropy_grad(z, np.full(z.shape[0], y)))

    def parameter_gradients(
        self, X: np.ndarray, labels: np.ndarray, l2_penalty: float = 0.0
    ) -> tuple[float, list[tuple[np.ndarray, np.ndarray]]]:
        """Mean cross-entropy (+ L2 on weights) and its gradient per layer."""
        z, inputs, pre = self._forward(X)
        n = z.shape[0]
        loss = float(np.mean(cross_entropy(z, labels)))
        delta = cross_entropy_grad(z, labels) / n
        grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(self.layers)  # type: ignore[list-item]
        for i in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[i]
            d_w = delta.T @ inputs[i] + l2_penalty * layer.weight
            d_b = delta.sum(axis=0)
            grads[i] = (d_w, d_b)
            if i > 0:
                delta = (delta @ layer.weight) * self.activation.derivative(pre[i - 1])
        if l2_penalty:
            loss += 0.5 * l2_penalty * sum(float(np.sum(l.weight**2)) for l in self.layers)
        return loss, grads


# ---------------------------------------------------------------------------
# Functional surface
# ---------------------------------------------------------------------------


def forward(model: Classifier, x: FeatureVector) -> np.ndarray:
    """Logits of a single input."""
    return model.logits(x)


def loss(model: Classifier, x: FeatureVector, y: int) -> float:
    """Softmax cross-entropy of a single input."""
    return model.loss(x, y)


def input_gradient(model: Classifier, x: FeatureVector, y: int) -> FeatureVector:
    """Exact gradient of the loss with respect to x, parameters held fixed."""
    return model.input_gradient(x, y)


def predict(model: Classifier, x: FeatureVector) -> int:
    """Argmax of the logits, ties broken by the lowest index."""
    return model.predict(x)
