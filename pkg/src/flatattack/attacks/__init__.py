"""Attack algorithms: FGSM family, MI-FGSM and the Adversarial Flatness Attack."""

from flatattack.attacks.afa import afa_attack, attack_ensemble
from flatattack.attacks.config import AttackConfig, FiniteDifferenceScheme
from flatattack.attacks.dual_order import DualOrderGradients, afa_objective_gradient, dual_order_gradients
from flatattack.attacks.gradient import fgsm, iterative_fgsm, mi_fgsm, momentum_step, random_sign_attack
from flatattack.attacks.mcas import mcas_offset, mcas_update
from flatattack.attacks.trace import AttackTrace, IterationRecord, export_trace_csv
from flatattack.attacks.variants import ALGORITHMS, AttackVariant, apply_variant, run_attack

__all__ = [
    "ALGORITHMS",
    "AttackConfig",
    "AttackTrace",
    "AttackVariant",
    "DualOrderGradients",
    "FiniteDifferenceScheme",
    "IterationRecord",
    "afa_attack",
    "afa_objective_gradient",
    "apply_variant",
    "attack_ensemble",
    "dual_order_gradients",
    "export_trace_csv",
    "fgsm",
    "iterative_fgsm",
    "mcas_offset",
    "mcas_update",
    "mi_fgsm",
    "momentum_step",
    "random_sign_attack",
    "run_attack",
]
