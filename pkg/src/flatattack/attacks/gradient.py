"""Sign-gradient attacks: FGSM, iterative FGSM, MI-FGSM, and a random-sign baseline."""

import logging

import numpy as np

from flatattack.attacks.config import AttackConfig
from flatattack.attacks.trace import AttackTrace, IterationRecord
from flatattack.models.base import LossSurface
from flatattack.numerics import (
    FeatureVector,
    SeededRng,
    as_vector,
    l1_normalized,
    norm,
    project_box_linf,
    sign,
)
from flatattack.observability.logging import AttackObserver, NullObserver

logger = logging.getLogger(__name__)


def momentum_step(m: FeatureVector, g: FeatureVector, eta: float) -> tuple[FeatureVector, bool]:
    """m' = eta * m + g / ||g||_1.

    Returns (m', degenerate). When ||g||_1 is below the guard the
    normalized term is skipped and only the decayed momentum remains.
    """
    u = l1_normalized(g)
    if u is None:
        return eta * m, True
    return eta * m + u, False


def sign_step(x_adv: FeatureVector, x: FeatureVector, direction: FeatureVector, step: float, eps: float) -> FeatureVector:
    return project_box_linf(x_adv + step * sign(direction), x, eps)


def fgsm(model: LossSurface, x: FeatureVector, y: int, eps: float) -> FeatureVector:
    """One signed-gradient step of size eps, clipped to the budget and box."""
    x = as_vector(x, "x")
    return sign_step(x, x, model.input_gradient(x, y), eps, eps)


def random_sign_attack(x: FeatureVector, eps: float, rng: SeededRng) -> FeatureVector:
    """Uniformly random ±eps perturbation; the equal-budget blind baseline."""
    x = as_vector(x, "x")
    return project_box_linf(x + eps * rng.choice_sign(x.shape[0]), x, eps)


def _record(
    model: LossSurface,
    x_adv: FeatureVector,
    y: int,
    t: int,
    g: FeatureVector,
    m: FeatureVector,
    degenerate: bool,
) -> IterationRecord:
    loss = model.loss(x_adv, y)
    return IterationRecord(
        t=t,
        adv_loss=-loss,
        g_l1=norm(g, 1),
        # the objective gradient is g0 itself; zero vectors get 0.0 as in cosine()
        cos_align_g0=1.0 if np.any(g) else 0.0,
        sample_losses=(loss,),
        momentum_l1=norm(m, 1),
        degenerate=degenerate,
    )


def mi_fgsm(
    model: LossSurface,
    x: FeatureVector,
    y: int,
    cfg: AttackConfig,
    observer: AttackObserver | None = None,
) -> tuple[FeatureVector, AttackTrace]:
    """Momentum iterative FGSM with L1-normalized gradient accumulation."""
    observer = observer or NullObserver()
    x = as_vector(x, "x")
    trace = AttackTrace(algorithm="mi", model_id=getattr(model, "model_id", ""))
    x_adv = x.copy()
    m = np.zeros_like(x)
    trace.iterates.append(x_adv)
    for t in range(cfg.steps):
        g = model.input_gradient(x_adv, y)
        m, degenerate = momentum_step(m, g, cfg.eta)
        record = _record(model, x_adv, y, t, g, m, degenerate)
        trace.append(record)
        observer.on_iteration("mi", record)
        x_adv = sign_step(x_adv, x, m, cfg.alpha, cfg.eps)
        trace.iterates.append(x_adv)
    return x_adv, trace


def iterative_fgsm(
    model: LossSurface,
    x: FeatureVector,
    y: int,
    cfg: AttackConfig,
    observer: AttackObserver | None = None,
) -> tuple[FeatureVector, AttackTrace]:
    """Momentum-free iterative FGSM.

    Steps along sign(g) directly; a gradient under the degenerate guard
    gives a zero step, as it does for the momentum attacks.
    """
    observer = observer or NullObserver()
    x = as_vector(x, "x")
    trace = AttackTrace(algorithm="ifgsm", model_id=getattr(model, "model_id", ""))
    x_adv = x.copy()
    trace.iterates.append(x_adv)
    for t in range(cfg.steps):
        g = model.input_gradient(x_adv, y)
        degenerate = l1_normalized(g) is None
        direction = np.zeros_like(g) if degenerate else g
        record = _record(model, x_adv, y, t, g, direction, degenerate)
        trace.append(record)
        observer.on_iteration("ifgsm", record)
        x_adv = sign_step(x_adv, x, direction, cfg.alpha, cfg.eps)
        trace.iterates.append(x_adv)
    return x_adv, trace
