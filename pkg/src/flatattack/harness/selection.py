"""Which test rows a transfer experiment attacks.

``leading`` takes the first rows of the test split. ``boundary`` keeps the
rows an eps-bounded attack can actually move across a class boundary: rows
every model classifies correctly whose L-inf distance to the nearest
bisector between class means (training split) is at most
``reach_fraction * eps``. Class means fix the boundaries independently of
any one model, so every algorithm and surrogate attacks the same rows.
"""

import logging
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from flatattack.errors import DomainError
from flatattack.models.base import Classifier
from flatattack.models.dataset import Dataset

logger = logging.getLogger(__name__)

SELECTIONS = ("leading", "boundary")


@dataclass(frozen=True)
class ExampleSet:
    inputs: np.ndarray
    labels: np.ndarray
    indices: np.ndarray  # rows of the test split

    def __len__(self) -> int:
        return int(self.labels.shape[0])


def class_means(dataset: Dataset) -> np.ndarray:
    """(C, d) per-class means of the training split.

    Raises:
        DomainError: If a class has no training rows.
    """
    train = dataset.train_split()
    means = np.zeros((dataset.num_classes, dataset.input_dim))
    for c in range(dataset.num_classes):
        rows = train.inputs[train.labels == c]
        if rows.shape[0] == 0:
            raise DomainError(f"class {c} has no training rows", reason="empty_class")
        means[c] = rows.mean(axis=0)
    return means


def bisector_reach(means: np.ndarray, inputs: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """L-inf distance from each row to the nearest bisector between its own
    class mean and another one; negative when the row is on the wrong side.

    For the bisector n . z = b with n = mu_k - mu_y, the L-inf distance of x
    is (b - n . x) / ||n||_1.
    """
    labels = np.asarray(labels, dtype=int)
    mu_y = means[labels]
    normals = means[None, :, :] - mu_y[:, None, :]
    offsets = 0.5 * (np.sum(means**2, axis=1)[None, :] - np.sum(mu_y**2, axis=1)[:, None])
    margins = offsets - np.einsum("ncd,nd->nc", normals, inputs)
    scale = np.abs(normals).sum(axis=2)
    reach = np.where(scale > 0, margins / np.where(scale > 0, scale, 1.0), np.inf)
    return reach.min(axis=1)


def _correct_everywhere(models: Mapping[str, Classifier], inputs: np.ndarray, labels: np.ndarray) -> np.ndarray:
    keep = np.ones(labels.shape[0], dtype=bool)
    for model in models.values():
        keep &= model.predict_batch(inputs) == labels
    return keep


def select_examples(
    dataset: Dataset,
    models: Mapping[str, Classifier],
    eps: float,
    selection: str = "leading",
    reach_fraction: float = 0.5,
    max_examples: Optional[int] = None,
) -> ExampleSet:
    """Test rows to attack, in test-split order, capped at ``max_examples``.

    Raises:
        DomainError: On an unknown selection or a non-positive reach fraction.
    """
    test = dataset.test_split()
    if selection == "leading":
        indices = np.arange(len(test))
    elif selection == "boundary":
        if reach_fraction <= 0:
            raise DomainError(f"reach_fraction must be positive, got {reach_fraction}", reason="reach_fraction")
        reach = bisector_reach(class_means(dataset), test.inputs, test.labels)
        keep = (reach > 0) & (reach <= reach_fraction * eps)
        keep &= _correct_everywhere(models, test.inputs, test.labels)
        indices = np.flatnonzero(keep)
        logger.info(
            "%d of %d test rows within %.4f of a class boundary and correct on all %d models",
            indices.size,
            len(test),
            reach_fraction * eps,
            len(models),
        )
    else:
        raise DomainError(f"unknown selection {selection!r}; choose from {', '.join(SELECTIONS)}", reason="selection")
    if max_examples is not None:
        indices = indices[:max_examples]
    return ExampleSet(inputs=test.inputs[indices], labels=test.labels[indices], indices=indices)
