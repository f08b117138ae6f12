"""Momentum-offset sampling for the inner neighbourhood samples.

Each uniform sample is pushed away from the running sign of recent sample
gradients, so consecutive samples land on differently shaped parts of the
neighbourhood instead of clustering where the loss is already explored.
"""

from flatattack.numerics import FeatureVector, sign


def mcas_offset(g_s: FeatureVector, gamma: float) -> FeatureVector:
    """-gamma * sign(g_s); zero while the sampling momentum is zero."""
    return -gamma * sign(g_s)


def mcas_update(g_s: FeatureVector, eta_mcas: float, g0: FeatureVector) -> FeatureVector:
    """g_s <- eta_mcas * g_s - g0."""
    return eta_mcas * g_s - g0
