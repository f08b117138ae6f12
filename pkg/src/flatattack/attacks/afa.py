"""Adversarial Flatness Attack.

Each outer iteration draws N neighbourhood samples around the current
iterate, shifts each one by the sampling momentum, probes the loss at three
nearby points, and averages the resulting flatness-regularized gradients.
The average drives an MI-FGSM style momentum step and an L-inf projection.

With lambda_f = 0, no neighbor-ascent term, sampling momentum off, N = 1 and
xi = 0, every sample is the iterate itself and the averaged gradient is g0,
so the trajectory is exactly that of ``mi_fgsm``. The three extra gradients
are skipped whenever lambda_f = 0 and the neighbor-ascent term is off.
"""

import logging
from typing import Sequence

import numpy as np

from flatattack.attacks.config import AttackConfig
from flatattack.attacks.dual_order import afa_objective_gradient, dual_order_gradients
from flatattack.attacks.gradient import momentum_step, sign_step
from flatattack.attacks.mcas import mcas_offset, mcas_update
from flatattack.attacks.trace import AttackTrace, IterationRecord
from flatattack.models.base import Classifier, LossSurface
from flatattack.models.ensemble import EnsembleClassifier
from flatattack.numerics import FeatureVector, SeededRng, as_vector, cosine, norm, sample_uniform_ball
from flatattack.observability.logging import AttackObserver, NullObserver

logger = logging.getLogger(__name__)


def afa_attack(
    model: LossSurface,
    x: FeatureVector,
    y: int,
    cfg: AttackConfig,
    rng: SeededRng,
    observer: AttackObserver | None = None,
    algorithm: str = "afa",
) -> tuple[FeatureVector, AttackTrace]:
    """Run the attack from clean input ``x`` with true label ``y``.

    ``rng`` is this example's stream; iteration t draws from ``rng.spawn(t)``.
    All N offsets of an iteration are drawn before any gradient is taken.
    """
    observer = observer or NullObserver()
    x = as_vector(x, "x")
    d = x.shape[0]
    trace = AttackTrace(algorithm=algorithm, model_id=getattr(model, "model_id", ""))

    x_adv = x.copy()
    m = np.zeros(d)
    g_s = np.zeros(d)
    trace.iterates.append(x_adv)
    # nothing reads g1..g3 without the flatness or neighbor-ascent terms
    plain_only = cfg.lambda_f == 0.0 and not cfg.neighbor_ascent

    for t in range(cfg.steps):
        step_rng = rng.spawn(t)
        offsets = [sample_uniform_ball(step_rng, d, cfg.xi) for _ in range(cfg.n_samples)]
        anchor = x if cfg.sample_around_clean else x_adv
        if cfg.mcas_reset_per_iteration:
            g_s = np.zeros(d)

        g_bar = np.zeros(d)
        g0_sum = np.zeros(d)
        sample_losses = []
        for offset in offsets:
            x0 = anchor + offset
            if cfg.mcas_enabled:
                x0 = x0 + mcas_offset(g_s, cfg.gamma_mcas)
            if plain_only:
                g0 = model.input_gradient(x0, y)
                objective = g0
            else:
                dg = dual_order_gradients(model, x0, y, cfg.alpha, cfg.scheme)
                g0 = dg.g0
                objective = afa_objective_gradient(dg, cfg.lambda_f, cfg.beta_f, cfg.neighbor_ascent)
            g_bar = g_bar + objective / cfg.n_samples
            g0_sum = g0_sum + g0
            sample_losses.append(model.loss(x0, y))
            if cfg.mcas_enabled:
                g_s = mcas_update(g_s, cfg.eta_mcas, g0)

        m, degenerate = momentum_step(m, g_bar, cfg.eta)
        if degenerate:
            logger.debug("%s: degenerate accumulated gradient at t=%d", algorithm, t)
        record = IterationRecord(
            t=t,
            adv_loss=-model.loss(x_adv, y),
            g_l1=norm(g_bar, 1),
            cos_align_g0=cosine(g_bar, g0_sum / cfg.n_samples),
            sample_losses=tuple(sample_losses),
            momentum_l1=norm(m, 1),
            degenerate=degenerate,
        )
        trace.append(record)
        observer.on_iteration(algorithm, record)

        x_adv = sign_step(x_adv, x, m, cfg.alpha, cfg.eps)
        trace.iterates.append(x_adv)

    return x_adv, trace


def attack_ensemble(
    models: Sequence[Classifier],
    x: FeatureVector,
    y: int,
    cfg: AttackConfig,
    rng: SeededRng,
    observer: AttackObserver | None = None,
) -> tuple[FeatureVector, AttackTrace]:
    """``afa_attack`` against the logit-averaged ensemble of ``models``."""
    return afa_attack(EnsembleClassifier(list(models)), x, y, cfg, rng, observer, algorithm="afa_ensemble")
