"""Inner-sample diversity and update-direction sign flips."""

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from flatattack.attacks.config import AttackConfig
from flatattack.errors import DomainError
from flatattack.harness.transfer import attack_examples
from flatattack.models.base import Classifier

logger = logging.getLogger(__name__)

STRATEGIES = ("uniform", "mcas")


@dataclass(frozen=True)
class DiversityCurve:
    strategy: str
    loss_std: tuple[float, ...]  # one entry per outer iteration


def _strategy_config(cfg: AttackConfig, strategy: str) -> AttackConfig:
    if strategy == "uniform":
        return cfg.updated(mcas_enabled=False)
    if strategy == "mcas":
        return cfg.updated(mcas_enabled=True)
    raise DomainError(f"unknown sampling strategy {strategy!r}; choose from {STRATEGIES}", reason="strategy")


def diversity_comparison(
    model: Classifier,
    inputs: np.ndarray,
    labels: np.ndarray,
    cfg: AttackConfig,
    strategies: Sequence[str] = STRATEGIES,
    threads: int = 1,
) -> list[DiversityCurve]:
    """Per-iteration std of the N inner-sample losses, averaged over examples.

    Raises:
        DomainError: If cfg.n_samples < 2 or a strategy is unknown.
    """
    if cfg.n_samples < 2:
        raise DomainError("loss diversity needs at least two inner samples", reason="n_samples")
    if len(inputs) == 0:
        raise DomainError("loss diversity over an empty set of examples", reason="empty")
    curves = []
    for strategy in strategies:
        _, traces = attack_examples("afa", model, inputs, labels, _strategy_config(cfg, strategy), threads)
        stds = np.array([t.loss_std_curve for t in traces])
        curves.append(DiversityCurve(strategy=strategy, loss_std=tuple(float(v) for v in stds.mean(axis=0))))
    if len(curves) == 2:
        a, b = curves
        wins = sum(1 for u, m in zip(a.loss_std, b.loss_std) if m >= u)
        logger.info("%s >= %s in %d of %d iterations", b.strategy, a.strategy, wins, cfg.steps)
    return curves


def sign_flip_counts(
    model: Classifier,
    inputs: np.ndarray,
    labels: np.ndarray,
    cfg: AttackConfig,
    threads: int = 1,
) -> dict[str, int]:
    """Iterations whose averaged update points against the mean plain
    gradient (negative cosine), with and without the neighbor-ascent term."""
    counts = {}
    for name, ascent in (("neighbor_ascent", True), ("no_neighbor_ascent", False)):
        _, traces = attack_examples("afa", model, inputs, labels, cfg.updated(neighbor_ascent=ascent), threads)
        counts[name] = sum(t.negative_alignment_count for t in traces)
    logger.info(
        "Negative-alignment iterations: %d with neighbor ascent, %d without",
        counts["neighbor_ascent"],
        counts["no_neighbor_ascent"],
    )
    return counts


# lambda_f multiples for the sign-flip sweep. Consecutive values differ by a
# factor of 3; the lambda_f at which the objective with neighbor ascent first
# turns against g0 is about 4x the one without (three more gradients).
SIGN_FLIP_SCALES = tuple(3.0**k for k in range(1, 11))


@dataclass(frozen=True)
class SignFlipSweep:
    lambda_f: tuple[float, ...]
    neighbor_ascent: tuple[int, ...]
    no_neighbor_ascent: tuple[int, ...]

    @property
    def totals(self) -> dict[str, int]:
        return {"neighbor_ascent": sum(self.neighbor_ascent), "no_neighbor_ascent": sum(self.no_neighbor_ascent)}


def sign_flip_sweep(
    model: Classifier,
    inputs: np.ndarray,
    labels: np.ndarray,
    cfg: AttackConfig,
    scales: Sequence[float] = SIGN_FLIP_SCALES,
    threads: int = 1,
) -> SignFlipSweep:
    """``sign_flip_counts`` at lambda_f = cfg.lambda_f * s for each scale s.

    At the default lambda_f the flatness terms are far smaller than g0 on
    low-dimensional models and neither objective ever turns around; the
    sweep finds the range where one does and the other does not.
    """
    if any(s <= 0 for s in scales):
        raise DomainError("lambda_f scales must be positive", reason="scales")
    values, ascent, plain = [], [], []
    for s in scales:
        lam = cfg.lambda_f * s
        counts = sign_flip_counts(model, inputs, labels, cfg.updated(lambda_f=lam), threads)
        values.append(lam)
        ascent.append(counts["neighbor_ascent"])
        plain.append(counts["no_neighbor_ascent"])
    return SignFlipSweep(lambda_f=tuple(values), neighbor_ascent=tuple(ascent), no_neighbor_ascent=tuple(plain))
