"""Named attack algorithms and ablation variants, with a single dispatch point."""

import logging
from enum import Enum

from flatattack.attacks.afa import afa_attack
from flatattack.attacks.config import AttackConfig
from flatattack.attacks.gradient import fgsm, iterative_fgsm, mi_fgsm, random_sign_attack
from flatattack.attacks.trace import AttackTrace
from flatattack.errors import ConfigError
from flatattack.models.base import LossSurface
from flatattack.numerics import FeatureVector, SeededRng, as_vector
from flatattack.observability.logging import AttackObserver

logger = logging.getLogger(__name__)


class AttackVariant(str, Enum):
    """Component toggles of the flatness attack."""

    MI_SAMPLING = "mi_sampling"  # neighbourhood sampling only: MI over N samples
    AF_UNIFORM = "af_uniform"  # flatness objective, uniform sampling
    AFA = "afa"  # everything on
    AZF_ONLY = "azf_only"  # zeroth-order flatness term only
    AFF_ONLY = "aff_only"  # first-order flatness term only
    NO_ASCENT = "no_ascent"  # flatness objective without the neighbor-ascent term


BASE_ALGORITHMS = ("fgsm", "ifgsm", "mi", "random")
ALGORITHMS = BASE_ALGORITHMS + tuple(v.value for v in AttackVariant)


def apply_variant(cfg: AttackConfig, variant: AttackVariant | str) -> AttackConfig:
    """Return ``cfg`` with the variant's toggles applied.

    lambda_f is held at the base value for the endpoint variants so that
    beta_f = 0 does not also switch the regularizer off.
    """
    variant = AttackVariant(variant)
    if variant is AttackVariant.AFA:
        return cfg
    if variant is AttackVariant.MI_SAMPLING:
        return cfg.updated(lambda_f=0.0, neighbor_ascent=False, mcas_enabled=False)
    if variant is AttackVariant.AF_UNIFORM:
        return cfg.updated(mcas_enabled=False)
    if variant is AttackVariant.AZF_ONLY:
        return cfg.updated(beta_f=1.0, lambda_f=cfg.lambda_f)
    if variant is AttackVariant.AFF_ONLY:
        return cfg.updated(beta_f=0.0, lambda_f=cfg.lambda_f)
    return cfg.updated(neighbor_ascent=False)


def run_attack(
    algorithm: str,
    model: LossSurface,
    x: FeatureVector,
    y: int,
    cfg: AttackConfig,
    rng: SeededRng,
    observer: AttackObserver | None = None,
) -> tuple[FeatureVector, AttackTrace]:
    """Run ``algorithm`` (a base algorithm or a variant name) on one example.

    Raises:
        ConfigError: If the algorithm name is unknown.
    """
    model_id = getattr(model, "model_id", "")
    if algorithm == "fgsm":
        x = as_vector(x, "x")
        x_adv = fgsm(model, x, y, cfg.eps)
        return x_adv, AttackTrace(algorithm, model_id, iterates=[x, x_adv])
    if algorithm == "random":
        x = as_vector(x, "x")
        x_adv = random_sign_attack(x, cfg.eps, rng)
        return x_adv, AttackTrace(algorithm, model_id, iterates=[x, x_adv])
    if algorithm == "ifgsm":
        return iterative_fgsm(model, x, y, cfg, observer)
    if algorithm == "mi":
        return mi_fgsm(model, x, y, cfg, observer)
    try:
        variant = AttackVariant(algorithm)
    except ValueError:
        raise ConfigError(
            f"unknown algorithm {algorithm!r}; choose one of {', '.join(ALGORITHMS)}",
            key="algorithm",
        ) from None
    return afa_attack(model, x, y, apply_variant(cfg, variant), rng, observer, algorithm=variant.value)
