"""Finite-difference oracle for checking analytic input gradients."""

import numpy as np

from flatattack.errors import DomainError
from flatattack.models.base import LossSurface
from flatattack.numerics import FeatureVector


def fd_gradient_oracle(model: LossSurface, x: FeatureVector, y: int, h: float = 1e-5) -> FeatureVector:
    """Central difference (L(x + h e_i) - L(x - h e_i)) / 2h per coordinate."""
    if h <= 0:
        raise DomainError(f"step h must be positive, got {h}", reason="step")
    x = np.asarray(x, dtype=np.float64)
    grad = np.empty_like(x)
    for i in range(x.shape[0]):
        up = x.copy()
        down = x.copy()
        up[i] += h
        down[i] -= h
        grad[i] = (model.loss(up, y) - model.loss(down, y)) / (2.0 * h)
    return grad


def relative_error(estimate: np.ndarray, reference: np.ndarray) -> float:
    """||estimate - reference||_2 / ||reference||_2 (absolute error if the reference is zero)."""
    diff = float(np.linalg.norm(estimate - reference))
    scale = float(np.linalg.norm(reference))
    return diff / scale if scale > 0 else diff
