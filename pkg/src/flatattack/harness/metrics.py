"""Fooling rates and the loss/transferability rank agreement."""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats

from flatattack.errors import DomainError, ShapeError
from flatattack.models.base import Classifier, cross_entropy

logger = logging.getLogger(__name__)


def evaluate_asr(
    target: Classifier,
    adversarial: np.ndarray,
    labels: np.ndarray,
    clean: Optional[np.ndarray] = None,
    filter_correct: bool = False,
) -> float:
    """Fraction of adversarial rows the target misclassifies.

    With ``filter_correct`` the denominator is restricted to rows whose clean
    counterpart (``clean``) the target classifies correctly.

    Raises:
        DomainError: If the denominator is empty.
        ShapeError: If rows and labels disagree, or the target's input
            dimension does not match.
    """
    adversarial = np.atleast_2d(np.asarray(adversarial, dtype=np.float64))
    labels = np.asarray(labels)
    if adversarial.shape[0] != labels.shape[0]:
        raise ShapeError(
            f"{adversarial.shape[0]} examples for {labels.shape[0]} labels",
            expected=adversarial.shape[0],
            actual=labels.shape[0],
        )
    if adversarial.shape[1] != target.input_dim:
        raise ShapeError(
            f"examples have {adversarial.shape[1]} features, model {getattr(target, 'model_id', '?')} "
            f"expects {target.input_dim}",
            expected=target.input_dim,
            actual=adversarial.shape[1],
        )
    keep = np.ones(labels.shape[0], dtype=bool)
    if filter_correct:
        if clean is None:
            raise DomainError("filtered fooling rate needs the clean inputs", reason="missing_clean")
        keep = target.predict_batch(np.atleast_2d(clean)) == labels
    if not keep.any():
        raise DomainError("fooling rate over an empty set of examples", reason="empty_denominator")
    fooled = target.predict_batch(adversarial[keep]) != labels[keep]
    return float(np.mean(fooled))


def mean_adversarial_loss(target: Classifier, adversarial: np.ndarray, labels: np.ndarray) -> float:
    """Mean of L^adv = -CE over the examples."""
    z = target.logits_batch(np.atleast_2d(adversarial))
    return float(-np.mean(cross_entropy(z, np.asarray(labels))))


@dataclass(frozen=True)
class RankAgreement:
    value: float
    degenerate: bool
    n_targets: int


def _is_constant(values: np.ndarray) -> bool:
    return values.size == 0 or bool(np.all(values == values[0]))


def per_target_means(matrix: np.ndarray, surrogate_ids: list[str], target_ids: list[str]) -> np.ndarray:
    """Column means over surrogates other than the target itself (NaN if none)."""
    out = np.full(len(target_ids), np.nan)
    for j, tid in enumerate(target_ids):
        rows = [i for i, sid in enumerate(surrogate_ids) if sid != tid]
        if rows:
            out[j] = float(np.mean(matrix[rows, j]))
    return out


def rank_agreement(asr_by_target: np.ndarray, loss_by_target: np.ndarray) -> RankAgreement:
    """Spearman correlation between per-target fooling rate and per-target
    negated adversarial loss (the cross-entropy).

    A positive value means targets on which the adversarial loss stays
    lower are also fooled less often. Targets with a NaN entry are dropped.
    Fewer than two targets or a constant input gives NaN flagged degenerate.
    """
    asr = np.asarray(asr_by_target, dtype=np.float64)
    neg_loss = -np.asarray(loss_by_target, dtype=np.float64)
    keep = ~(np.isnan(asr) | np.isnan(neg_loss))
    asr, neg_loss = asr[keep], neg_loss[keep]
    if asr.size < 2 or _is_constant(asr) or _is_constant(neg_loss):
        logger.info("Rank agreement is degenerate over %d targets", int(asr.size))
        return RankAgreement(value=float("nan"), degenerate=True, n_targets=int(asr.size))
    rho = stats.spearmanr(asr, neg_loss).statistic
    return RankAgreement(value=float(rho), degenerate=False, n_targets=int(asr.size))


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing their mean rank, by pairwise counting."""
    k = values.shape[0]
    ranks = np.empty(k)
    for i in range(k):
        below = sum(1 for j in range(k) if values[j] < values[i])
        tied = sum(1 for j in range(k) if j != i and values[j] == values[i])
        ranks[i] = 1.0 + below + 0.5 * tied
    return ranks


def rank_agreement_bruteforce(asr_by_target: np.ndarray, loss_by_target: np.ndarray) -> float:
    """Spearman via O(k^2) rank counting and a direct Pearson formula."""
    a = _average_ranks(np.asarray(asr_by_target, dtype=np.float64))
    b = _average_ranks(-np.asarray(loss_by_target, dtype=np.float64))
    da = a - a.mean()
    db = b - b.mean()
    denom = np.sqrt(np.sum(da * da) * np.sum(db * db))
    if denom == 0:
        return float("nan")
    return float(np.sum(da * db) / denom)
