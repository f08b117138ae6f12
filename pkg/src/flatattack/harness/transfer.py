"""Transfer experiments: attack from each surrogate, evaluate on every target.

Example i always draws from stream (attack.seed, i), whichever surrogate or
algorithm is attacking, so comparisons between algorithms see the same
random numbers. Examples are attacked in a thread pool; results are
collected in example order, so reports do not depend on the pool size.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

import numpy as np

from flatattack.attacks.config import AttackConfig
from flatattack.attacks.trace import AttackTrace
from flatattack.attacks.variants import run_attack
from flatattack.errors import ConfigError, DomainError, ExperimentError
from flatattack.harness.metrics import (
    RankAgreement,
    evaluate_asr,
    mean_adversarial_loss,
    per_target_means,
    rank_agreement,
)
from flatattack.harness.selection import ExampleSet, select_examples
from flatattack.models.base import Classifier
from flatattack.models.dataset import Dataset
from flatattack.models.ensemble import EnsembleClassifier
from flatattack.models.mlp import MlpClassifier
from flatattack.models.serialization import model_hash
from flatattack.numerics import SeededRng
from flatattack.observability.logging import AttackObserver

logger = logging.getLogger(__name__)

MIN_ZOO_SIZE = 3


@dataclass
class TransferExperiment:
    """Everything one transfer run needs."""

    models: dict[str, Classifier]
    dataset: Dataset
    attack: AttackConfig
    algorithm: str = "afa"
    surrogates: Optional[list[str]] = None  # None: every model
    max_examples: Optional[int] = None
    threads: int = 1
    observer: Optional[AttackObserver] = None
    selection: str = "leading"
    reach_fraction: float = 0.5

    def surrogate_ids(self) -> list[str]:
        ids = list(self.surrogates) if self.surrogates else list(self.models)
        missing = [s for s in ids if s not in self.models]
        if missing:
            raise ConfigError(
                f"surrogate {missing[0]!r} is not in the zoo; available: {', '.join(self.models)}",
                key="surrogate",
            )
        return ids

    def example_set(self) -> ExampleSet:
        return select_examples(
            self.dataset, self.models, self.attack.eps, self.selection, self.reach_fraction, self.max_examples
        )

    def examples(self) -> tuple[np.ndarray, np.ndarray]:
        chosen = self.example_set()
        return chosen.inputs, chosen.labels


@dataclass
class TransferReport:
    algorithm: str
    surrogate_ids: list[str]
    target_ids: list[str]
    asr: np.ndarray  # surrogates x targets
    asr_filtered: np.ndarray
    adv_loss: np.ndarray
    rank_agreement: RankAgreement
    attack: AttackConfig
    clean_inputs: Optional[np.ndarray]
    labels: np.ndarray
    adversarial: dict[str, np.ndarray] = field(default_factory=dict)
    traces: dict[str, list[AttackTrace]] = field(default_factory=dict)
    model_hashes: dict[str, str] = field(default_factory=dict)

    @property
    def n_examples(self) -> int:
        return int(self.labels.shape[0])

    @property
    def seeds(self) -> dict[str, int]:
        return {"attack": self.attack.seed}

    def diagonal(self) -> np.ndarray:
        """White-box ASR for each surrogate that is also a target."""
        return np.array(
            [self.asr[i, self.target_ids.index(s)] for i, s in enumerate(self.surrogate_ids) if s in self.target_ids]
        )

    def off_diagonal(self) -> np.ndarray:
        return np.array(
            [
                self.asr[i, j]
                for i, s in enumerate(self.surrogate_ids)
                for j, t in enumerate(self.target_ids)
                if s != t
            ]
        )

    @property
    def mean_whitebox_asr(self) -> float:
        d = self.diagonal()
        return float(np.mean(d)) if d.size else float("nan")

    @property
    def mean_transfer_asr(self) -> float:
        o = self.off_diagonal()
        return float(np.mean(o)) if o.size else float("nan")

    def whitebox_dominance(self) -> tuple[int, int]:
        """(cells where the row's white-box ASR >= the cell, off-diagonal cells)."""
        holds = total = 0
        for i, s in enumerate(self.surrogate_ids):
            if s not in self.target_ids:
                continue
            white = self.asr[i, self.target_ids.index(s)]
            for j, t in enumerate(self.target_ids):
                if t == s:
                    continue
                total += 1
                if white >= self.asr[i, j]:
                    holds += 1
                else:
                    logger.info("Transfer %s->%s (%.3f) exceeds white-box %.3f", s, t, self.asr[i, j], white)
        return holds, total


def attack_examples(
    algorithm: str,
    model: Classifier,
    inputs: np.ndarray,
    labels: np.ndarray,
    cfg: AttackConfig,
    threads: int = 1,
    observer: Optional[AttackObserver] = None,
) -> tuple[np.ndarray, list[AttackTrace]]:
    """Attack every row; example i uses stream (cfg.seed, i)."""

    def one(i: int) -> tuple[np.ndarray, AttackTrace]:
        rng = SeededRng(cfg.seed, stream_id=i)
        return run_attack(algorithm, model, inputs[i], int(labels[i]), cfg, rng, observer)

    indices = range(inputs.shape[0])
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, indices))
    else:
        results = [one(i) for i in indices]
    if not results:
        return np.empty((0, inputs.shape[1])), []
    return np.stack([r[0] for r in results]), [r[1] for r in results]


def _check_zoo(models: Mapping[str, Classifier]) -> None:
    if len(models) < MIN_ZOO_SIZE:
        raise ExperimentError(
            f"a transfer experiment needs at least {MIN_ZOO_SIZE} models, got {len(models)}",
            reason="zoo_too_small",
        )
    for mid, model in models.items():
        if isinstance(model, MlpClassifier) and model.train_accuracy is None:
            raise ExperimentError(f"model {mid} has not been trained", reason="untrained_model")


def _filtered_asr(target: Classifier, adv: np.ndarray, labels: np.ndarray, clean: Optional[np.ndarray]) -> float:
    if clean is None:
        return float("nan")
    try:
        return evaluate_asr(target, adv, labels, clean=clean, filter_correct=True)
    except DomainError:
        logger.warning("%s classifies no clean example correctly", getattr(target, "model_id", "?"))
        return float("nan")


def score_adversarial(
    algorithm: str,
    models: Mapping[str, Classifier],
    adversarial: Mapping[str, np.ndarray],
    labels: np.ndarray,
    attack: AttackConfig,
    clean: Optional[np.ndarray] = None,
    traces: Optional[dict[str, list[AttackTrace]]] = None,
) -> TransferReport:
    """Evaluate each surrogate's adversarial set on every model.

    Without ``clean`` inputs the filtered fooling rates are NaN.

    Raises:
        ShapeError: If examples and a model disagree on dimension.
    """
    surrogate_ids = list(adversarial)
    target_ids = list(models)
    asr = np.zeros((len(surrogate_ids), len(target_ids)))
    asr_filtered = np.zeros_like(asr)
    adv_loss = np.zeros_like(asr)
    for i, sid in enumerate(surrogate_ids):
        adv = adversarial[sid]
        for j, tid in enumerate(target_ids):
            target = models[tid]
            asr[i, j] = evaluate_asr(target, adv, labels)
            asr_filtered[i, j] = _filtered_asr(target, adv, labels, clean)
            adv_loss[i, j] = mean_adversarial_loss(target, adv, labels)
        others = [asr[i, j] for j, t in enumerate(target_ids) if t != sid]
        logger.info(
            "%s from %s: mean transfer %.3f over %d targets",
            algorithm,
            sid,
            float(np.mean(others)) if others else float("nan"),
            len(others),
        )

    agreement = rank_agreement(
        per_target_means(asr, surrogate_ids, target_ids),
        per_target_means(adv_loss, surrogate_ids, target_ids),
    )
    return TransferReport(
        algorithm=algorithm,
        surrogate_ids=surrogate_ids,
        target_ids=target_ids,
        asr=asr,
        asr_filtered=asr_filtered,
        adv_loss=adv_loss,
        rank_agreement=agreement,
        attack=attack,
        clean_inputs=clean,
        labels=np.asarray(labels),
        adversarial=dict(adversarial),
        traces=traces or {},
        model_hashes={mid: model_hash(m) for mid, m in models.items() if isinstance(m, MlpClassifier)},
    )


def run_transfer_experiment(exp: TransferExperiment) -> TransferReport:
    """Attack from every surrogate, then fill the ASR and adversarial-loss
    matrices for one algorithm.

    Raises:
        ExperimentError: If the zoo is too small or holds an untrained model.
        ConfigError: If a surrogate id is not in the zoo.
    """
    _check_zoo(exp.models)
    surrogate_ids = exp.surrogate_ids()
    inputs, labels = exp.examples()
    if inputs.shape[0] == 0:
        raise ExperimentError(f"no test rows selected ({exp.selection})", reason="no_examples")

    adversarial: dict[str, np.ndarray] = {}
    traces: dict[str, list[AttackTrace]] = {}
    for sid in surrogate_ids:
        adversarial[sid], traces[sid] = attack_examples(
            exp.algorithm, exp.models[sid], inputs, labels, exp.attack, exp.threads, exp.observer
        )
    return score_adversarial(exp.algorithm, exp.models, adversarial, labels, exp.attack, inputs, traces)


def run_ablation(exp: TransferExperiment, variants: Sequence[str]) -> dict[str, TransferReport]:
    """One transfer report per algorithm or variant name, same zoo and seeds."""
    return {name: run_transfer_experiment(replace(exp, algorithm=name)) for name in variants}


@dataclass(frozen=True)
class ComparisonRow:
    algorithm: str
    mean_whitebox_asr: float
    mean_transfer_asr: float
    min_transfer_asr: float
    max_transfer_asr: float
    rank_agreement: float


def compare_algorithms(reports: Mapping[str, TransferReport]) -> list[ComparisonRow]:
    rows = []
    for name, report in reports.items():
        off = report.off_diagonal()
        rows.append(
            ComparisonRow(
                algorithm=name,
                mean_whitebox_asr=report.mean_whitebox_asr,
                mean_transfer_asr=report.mean_transfer_asr,
                min_transfer_asr=float(off.min()) if off.size else float("nan"),
                max_transfer_asr=float(off.max()) if off.size else float("nan"),
                rank_agreement=report.rank_agreement.value,
            )
        )
    return rows


def eps_monotonicity(exp: TransferExperiment, eps_values: Sequence[float]) -> dict[float, float]:
    """Mean white-box ASR over surrogates for each budget; alpha, xi and
    gamma follow eps unless they were set explicitly."""
    _check_zoo(exp.models)
    inputs, labels = exp.examples()
    out: dict[float, float] = {}
    for eps in eps_values:
        cfg = exp.attack.updated(eps=float(eps))
        rates = []
        for sid in exp.surrogate_ids():
            adv, _ = attack_examples(exp.algorithm, exp.models[sid], inputs, labels, cfg, exp.threads)
            rates.append(evaluate_asr(exp.models[sid], adv, labels))
        out[float(eps)] = float(np.mean(rates))
        logger.info("eps=%.5f: mean white-box ASR %.3f", eps, out[float(eps)])
    values = [out[float(e)] for e in sorted(eps_values)]
    if any(b < a for a, b in zip(values, values[1:])):
        logger.warning("white-box ASR is not monotone in eps: %s", values)
    return out


def ensemble_transfer(exp: TransferExperiment, member_ids: Sequence[str]) -> dict[str, dict[str, float]]:
    """Attack the logit-averaged ensemble of ``member_ids`` and each member
    alone; report fooling rates on every held-out model.

    Returns ``{"ensemble": {target: asr}, "<member>": {target: asr}, ...}``.
    """
    _check_zoo(exp.models)
    missing = [m for m in member_ids if m not in exp.models]
    if missing:
        raise ConfigError(
            f"ensemble member {missing[0]!r} is not in the zoo; available: {', '.join(exp.models)}",
            key="ensemble",
        )
    held_out = [t for t in exp.models if t not in member_ids]
    if not held_out:
        raise ExperimentError("the ensemble uses every model; nothing is held out", reason="no_held_out")
    inputs, labels = exp.examples()
    attackers: dict[str, Classifier] = {"ensemble": EnsembleClassifier([exp.models[m] for m in member_ids])}
    attackers.update({m: exp.models[m] for m in member_ids})
    out: dict[str, dict[str, float]] = {}
    for name, attacker in attackers.items():
        adv, _ = attack_examples(exp.algorithm, attacker, inputs, labels, exp.attack, exp.threads)
        out[name] = {t: evaluate_asr(exp.models[t], adv, labels) for t in held_out}
    return out
