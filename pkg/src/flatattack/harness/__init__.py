"""End-to-end experiments on synthetic data and small model zoos."""

from flatattack.harness.datasets import DatasetSpec, make_synthetic_dataset
from flatattack.harness.diversity import (
    SIGN_FLIP_SCALES,
    DiversityCurve,
    SignFlipSweep,
    diversity_comparison,
    sign_flip_counts,
    sign_flip_sweep,
)
from flatattack.harness.metrics import (
    RankAgreement,
    evaluate_asr,
    mean_adversarial_loss,
    rank_agreement,
    rank_agreement_bruteforce,
)
from flatattack.harness.reporting import (
    emit_report,
    load_adversarial_set,
    read_matrix_csv,
    save_adversarial_set,
    write_comparison_csv,
    write_diversity_csv,
)
from flatattack.harness.selection import SELECTIONS, ExampleSet, bisector_reach, class_means, select_examples
from flatattack.harness.transfer import (
    ComparisonRow,
    TransferExperiment,
    TransferReport,
    attack_examples,
    compare_algorithms,
    ensemble_transfer,
    eps_monotonicity,
    run_ablation,
    run_transfer_experiment,
    score_adversarial,
)
from flatattack.harness.zoo import DEFAULT_ZOO, ModelSpec, build_zoo

__all__ = [
    "DEFAULT_ZOO",
    "SELECTIONS",
    "SIGN_FLIP_SCALES",
    "ComparisonRow",
    "DatasetSpec",
    "DiversityCurve",
    "ExampleSet",
    "ModelSpec",
    "RankAgreement",
    "SignFlipSweep",
    "TransferExperiment",
    "TransferReport",
    "attack_examples",
    "bisector_reach",
    "build_zoo",
    "class_means",
    "compare_algorithms",
    "diversity_comparison",
    "emit_report",
    "ensemble_transfer",
    "eps_monotonicity",
    "evaluate_asr",
    "load_adversarial_set",
    "make_synthetic_dataset",
    "mean_adversarial_loss",
    "rank_agreement",
    "rank_agreement_bruteforce",
    "read_matrix_csv",
    "run_ablation",
    "run_transfer_experiment",
    "save_adversarial_set",
    "score_adversarial",
    "select_examples",
    "sign_flip_counts",
    "sign_flip_sweep",
    "write_comparison_csv",
    "write_diversity_csv",
]
