"""Gradient probes for the flatness-regularized attack objective.

From a sample point x0 the attack takes three short probe steps of size
alpha and keeps the gradient at every point:

    x1 = x0 - alpha * g0 / ||g0||_1
    x2 = x0 - alpha * (g1 - g0) / ||g1 - g0||_1
    x3 = x2 - alpha * g2 / ||g2||_1

(g1 - g0) approximates -alpha * H u0 and (g3 - g2) the same quantity at x2,
which stand in for the gradients of the zeroth- and first-order flatness
terms. The forward scheme above is the default. The backward scheme probes
in the negated directions and flips the difference, the central scheme
probes both ways and halves the difference; all three estimate the same
oriented quantities so the objective is scheme-agnostic.

A probe whose direction has L1 norm under the degenerate guard is a zero
step: the probe point coincides with its anchor and reuses the anchor's
gradient.
"""

from dataclasses import dataclass

from flatattack.attacks.config import FiniteDifferenceScheme
from flatattack.errors import DomainError
from flatattack.models.base import LossSurface
from flatattack.numerics import FeatureVector, l1_normalized


@dataclass(frozen=True, eq=False)
class DualOrderGradients:
    x0: FeatureVector
    x1: FeatureVector
    x2: FeatureVector
    x3: FeatureVector
    g0: FeatureVector
    g1: FeatureVector
    g2: FeatureVector
    g3: FeatureVector
    zeroth_diff: FeatureVector  # oriented like g1 - g0
    first_diff: FeatureVector  # oriented like g3 - g2
    scheme: FiniteDifferenceScheme = FiniteDifferenceScheme.FDM

    @classmethod
    def from_probes(
        cls,
        points: tuple[FeatureVector, FeatureVector, FeatureVector, FeatureVector],
        gradients: tuple[FeatureVector, FeatureVector, FeatureVector, FeatureVector],
    ) -> "DualOrderGradients":
        """Forward-difference bundle from explicit probe points and gradients."""
        x0, x1, x2, x3 = points
        g0, g1, g2, g3 = gradients
        return cls(x0, x1, x2, x3, g0, g1, g2, g3, g1 - g0, g3 - g2)


def _probe(
    model: LossSurface,
    anchor: FeatureVector,
    anchor_grad: FeatureVector,
    direction: FeatureVector,
    y: int,
    alpha: float,
    toward: float,
) -> tuple[FeatureVector, FeatureVector]:
    """Step ``toward * alpha`` along direction/||direction||_1 and evaluate."""
    u = l1_normalized(direction)
    if u is None:
        return anchor, anchor_grad
    x = anchor + toward * alpha * u
    return x, model.input_gradient(x, y)


def dual_order_gradients(
    model: LossSurface,
    x0: FeatureVector,
    y: int,
    alpha: float,
    scheme: FiniteDifferenceScheme = FiniteDifferenceScheme.FDM,
) -> DualOrderGradients:
    """Gradients at x0 and the three probe points under the chosen scheme."""
    if alpha <= 0:
        raise DomainError(f"probe step alpha must be positive, got {alpha}", reason="alpha")
    scheme = FiniteDifferenceScheme(scheme)
    g0 = model.input_gradient(x0, y)

    if scheme is FiniteDifferenceScheme.FDM:
        x1, g1 = _probe(model, x0, g0, g0, y, alpha, -1.0)
        zeroth = g1 - g0
        x2, g2 = _probe(model, x0, g0, zeroth, y, alpha, -1.0)
        x3, g3 = _probe(model, x2, g2, g2, y, alpha, -1.0)
        first = g3 - g2
    elif scheme is FiniteDifferenceScheme.BDM:
        x1, g1 = _probe(model, x0, g0, g0, y, alpha, 1.0)
        zeroth = g0 - g1
        x2, g2 = _probe(model, x0, g0, zeroth, y, alpha, 1.0)
        x3, g3 = _probe(model, x2, g2, g2, y, alpha, 1.0)
        first = g2 - g3
    else:
        x1, g1 = _probe(model, x0, g0, g0, y, alpha, -1.0)
        _, g1_back = _probe(model, x0, g0, g0, y, alpha, 1.0)
        zeroth = (g1 - g1_back) / 2.0
        x2, g2 = _probe(model, x0, g0, zeroth, y, alpha, -1.0)
        x3, g3 = _probe(model, x2, g2, g2, y, alpha, -1.0)
        _, g3_back = _probe(model, x2, g2, g2, y, alpha, 1.0)
        first = (g3 - g3_back) / 2.0

    return DualOrderGradients(x0, x1, x2, x3, g0, g1, g2, g3, zeroth, first, scheme)


def afa_objective_gradient(
    dg: DualOrderGradients,
    lambda_f: float,
    beta_f: float,
    neighbor_ascent: bool = True,
) -> FeatureVector:
    """g0 + lambda_f * (beta_f * Δ0 + (1 - beta_f) * Δ1), plus g1 + g2 + g3
    when the neighbor-ascent term is on.

    Without that term the regularizer can outweigh g0 and flip the sign of
    the update; adding the neighbor gradients keeps it pointing uphill.
    """
    if not 0.0 <= beta_f <= 1.0:
        raise DomainError(f"beta_f must lie in [0, 1], got {beta_f}", reason="beta_f")
    out = dg.g0 + lambda_f * (beta_f * dg.zeroth_diff + (1.0 - beta_f) * dg.first_diff)
    if neighbor_ascent:
        out = out + dg.g1 + dg.g2 + dg.g3
    return out
