"""Synthetic Gaussian-blob classification data in the unit cube."""

import logging
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from flatattack.models.dataset import Dataset
from flatattack.numerics import SeededRng

logger = logging.getLogger(__name__)

# Rejection attempts per cluster centre before accepting a close one.
MAX_CENTER_DRAWS = 1000


class DatasetSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    d: int = Field(default=2, ge=2)
    num_classes: int = Field(default=8, ge=2)
    n_per_class: int = Field(default=200, ge=1)
    cluster_spread: float = Field(default=0.05, gt=0)
    test_fraction: float = Field(default=0.2, ge=0, lt=1)
    # centres closer than this multiple of the spread are redrawn
    min_separation: float = Field(default=3.0, ge=0)
    seed: int = Field(default=0, ge=0)


def _draw_centers(spec: DatasetSpec, rng: SeededRng) -> np.ndarray:
    min_dist = spec.min_separation * spec.cluster_spread
    centers: list[np.ndarray] = []
    for c in range(spec.num_classes):
        candidate = rng.uniform(0.2, 0.8, spec.d)
        for _ in range(MAX_CENTER_DRAWS):
            if all(np.linalg.norm(candidate - other) >= min_dist for other in centers):
                break
            candidate = rng.uniform(0.2, 0.8, spec.d)
        else:
            logger.warning("class %d centre is closer than %.3f to another centre", c, min_dist)
        centers.append(candidate)
    return np.stack(centers)


def make_synthetic_dataset(spec: DatasetSpec, rng: Optional[SeededRng] = None) -> Dataset:
    """C Gaussian clusters with centres in [0.2, 0.8]^d, clipped to [0, 1].

    Rows are grouped by class. Within each class a seeded permutation marks
    round(test_fraction * n_per_class) rows as test.
    """
    rng = rng or SeededRng(spec.seed)
    centers = _draw_centers(spec, rng.spawn(0))
    labels = np.repeat(np.arange(spec.num_classes), spec.n_per_class)
    noise = rng.spawn(1).normal((labels.shape[0], spec.d), scale=spec.cluster_spread)
    inputs = np.clip(centers[labels] + noise, 0.0, 1.0)

    n_test = int(round(spec.test_fraction * spec.n_per_class))
    split_rng = rng.spawn(2)
    is_test = np.zeros(labels.shape[0], dtype=bool)
    for c in range(spec.num_classes):
        chosen = split_rng.permutation(spec.n_per_class)[:n_test]
        is_test[c * spec.n_per_class + chosen] = True

    dataset = Dataset(inputs=inputs, labels=labels, num_classes=spec.num_classes, is_test=is_test)
    logger.info(
        "Generated %d rows (d=%d, C=%d, %d test) from seed %d",
        len(dataset),
        spec.d,
        spec.num_classes,
        int(is_test.sum()),
        rng.master_seed,
    )
    return dataset
