"""Central-difference Hessian-vector products of the classification loss."""

import numpy as np

from flatattack.errors import DomainError
from flatattack.models.base import LossSurface
from flatattack.numerics import FeatureVector, check_same_dim


def hvp_oracle(
    model: LossSurface,
    x: FeatureVector,
    y: int,
    direction: FeatureVector,
    h: float = 1e-5,
) -> FeatureVector:
    """(grad L(x + h v) - grad L(x - h v)) / 2h ≈ H v.

    Raises:
        DomainError: If the model is not twice differentiable (relu) or h <= 0.
    """
    if not model.is_smooth:
        raise DomainError("Hessian-vector products need a C2 model (relu is not)", reason="not_smooth")
    if h <= 0:
        raise DomainError(f"step h must be positive, got {h}", reason="step")
    x = np.asarray(x, dtype=np.float64)
    direction = np.asarray(direction, dtype=np.float64)
    check_same_dim(x, direction, "point and direction")
    g_plus = model.input_gradient(x + h * direction, y)
    g_minus = model.input_gradient(x - h * direction, y)
    return (g_plus - g_minus) / (2.0 * h)
