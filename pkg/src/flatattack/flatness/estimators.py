"""Sampled estimators of zeroth-order, first-order and combined adversarial flatness.

Everything here is measured on the adversarial loss L^adv = -L. The exact
quantities are maxima over the xi-neighbourhood; we take the maximum over a
finite sample set that always contains the centre, so both estimates are
non-negative and never decrease as samples are added.
"""

import logging
from dataclasses import dataclass

import numpy as np

from flatattack.errors import DomainError
from flatattack.models.base import LossSurface
from flatattack.numerics import FeatureVector, SeededRng, sample_uniform_ball

logger = logging.getLogger(__name__)

# Rows per batched model evaluation.
EVAL_CHUNK = 4096


@dataclass(frozen=True)
class FlatnessEstimate:
    psi0: float
    psi1: float
    psi_af: float
    xi: float
    beta_f: float
    n_samples: int
    seed: int


def _check(xi: float, n: int) -> None:
    if xi < 0:
        raise DomainError(f"xi must be non-negative, got {xi}", reason="xi")
    if n < 1:
        raise DomainError(f"need at least one sample, got n={n}", reason="n_samples")


def sample_offsets(rng: SeededRng, n: int, d: int, xi: float) -> np.ndarray:
    """n per-coordinate uniform offsets, drawn in order so prefixes are nested."""
    return np.stack([sample_uniform_ball(rng, d, xi) for _ in range(n)])


def chunked(fn, X: np.ndarray, y: int) -> np.ndarray:
    """Apply a batch evaluator in fixed-size chunks."""
    if X.shape[0] <= EVAL_CHUNK:
        return fn(X, y)
    return np.concatenate([fn(X[i : i + EVAL_CHUNK], y) for i in range(0, X.shape[0], EVAL_CHUNK)])


def zeroth_order_from_offsets(model: LossSurface, x_adv: FeatureVector, y: int, offsets: np.ndarray) -> float:
    """max over {0} ∪ offsets of L^adv(x_adv + v) - L^adv(x_adv)."""
    centre = model.adversarial_loss(x_adv, y)
    if offsets.shape[0] == 0:
        return 0.0
    adv = -chunked(model.loss_batch, x_adv + offsets, y)
    return max(0.0, float(np.max(adv - centre)))


def first_order_from_offsets(
    model: LossSurface, x_adv: FeatureVector, y: int, offsets: np.ndarray, xi: float
) -> float:
    """xi * max over {0} ∪ offsets of ||grad L^adv(x_adv + v)||_2."""
    best = float(np.linalg.norm(model.input_gradient(x_adv, y)))
    if offsets.shape[0]:
        grads = chunked(model.gradient_batch, x_adv + offsets, y)
        best = max(best, float(np.max(np.linalg.norm(grads, axis=1))))
    return xi * best


def estimate_psi0(model: LossSurface, x_adv: FeatureVector, y: int, xi: float, n: int, rng: SeededRng) -> float:
    """Sampled adversarial zeroth-order flatness."""
    _check(xi, n)
    if xi == 0:
        return 0.0
    return zeroth_order_from_offsets(model, x_adv, y, sample_offsets(rng, n, x_adv.shape[0], xi))


def estimate_psi1(model: LossSurface, x_adv: FeatureVector, y: int, xi: float, n: int, rng: SeededRng) -> float:
    """Sampled adversarial first-order flatness."""
    _check(xi, n)
    return first_order_from_offsets(model, x_adv, y, sample_offsets(rng, n, x_adv.shape[0], xi), xi)


def adversarial_flatness(psi0: float, psi1: float, beta_f: float) -> float:
    """Convex combination beta_f * psi0 + (1 - beta_f) * psi1."""
    if not 0.0 <= beta_f <= 1.0:
        raise DomainError(f"beta_f must lie in [0, 1], got {beta_f}", reason="beta_f")
    return beta_f * psi0 + (1.0 - beta_f) * psi1


def estimate_flatness(
    model: LossSurface,
    x_adv: FeatureVector,
    y: int,
    xi: float,
    n: int,
    beta_f: float,
    rng: SeededRng,
) -> FlatnessEstimate:
    """Both estimates from one shared sample set, plus their combination."""
    _check(xi, n)
    offsets = sample_offsets(rng, n, x_adv.shape[0], xi)
    psi0 = zeroth_order_from_offsets(model, x_adv, y, offsets) if xi > 0 else 0.0
    psi1 = first_order_from_offsets(model, x_adv, y, offsets, xi)
    return FlatnessEstimate(
        psi0=psi0,
        psi1=psi1,
        psi_af=adversarial_flatness(psi0, psi1, beta_f),
        xi=xi,
        beta_f=beta_f,
        n_samples=n,
        seed=rng.master_seed,
    )
