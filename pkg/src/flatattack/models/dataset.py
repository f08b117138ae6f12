"""Labelled feature matrix with a recorded train/test split, plus CSV IO."""

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from flatattack.errors import FlatAttackError, ModelFormatError, ShapeError

logger = logging.getLogger(__name__)

DATASET_SCHEMA_VERSION = 1


def fmt_float(value: float) -> str:
    """17 significant digits: enough to round-trip any float64."""
    return format(float(value), ".17g")


@dataclass(frozen=True, eq=False)
class Dataset:
    """Rows of features in [0, 1]^d with class labels in [0, C)."""

    inputs: np.ndarray
    labels: np.ndarray
    num_classes: int
    is_test: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        if self.inputs.ndim != 2:
            raise ShapeError(f"inputs must be a matrix, got shape {self.inputs.shape}")
        if self.labels.shape != (self.inputs.shape[0],):
            raise ShapeError(
                f"{self.labels.shape[0]} labels for {self.inputs.shape[0]} rows",
                expected=self.inputs.shape[0],
                actual=self.labels.shape[0],
            )
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise ShapeError(f"labels must lie in [0, {self.num_classes})")
        if self.inputs.size and (self.inputs.min() < 0.0 or self.inputs.max() > 1.0):
            raise ShapeError("feature values must lie in [0, 1]")
        if self.is_test is not None and self.is_test.shape != self.labels.shape:
            raise ShapeError("split mask does not match row count")

    @property
    def input_dim(self) -> int:
        return self.inputs.shape[1]

    def __len__(self) -> int:
        return self.inputs.shape[0]

    def _subset(self, mask: np.ndarray) -> "Dataset":
        return Dataset(inputs=self.inputs[mask], labels=self.labels[mask], num_classes=self.num_classes)

    def train_split(self) -> "Dataset":
        if self.is_test is None:
            return self
        return self._subset(~self.is_test)

    def test_split(self) -> "Dataset":
        if self.is_test is None:
            return self
        return self._subset(self.is_test)

    def class_counts(self) -> list[int]:
        return np.bincount(self.labels, minlength=self.num_classes).tolist()


def save_dataset(dataset: Dataset, path: Path, metadata: Optional[dict[str, Any]] = None) -> None:
    """Write ``path`` (CSV: split,label,x0..) and a ``.json`` sidecar."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        is_test = dataset.is_test if dataset.is_test is not None else np.zeros(len(dataset), dtype=bool)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["split", "label", *[f"x{i}" for i in range(dataset.input_dim)]])
            for row, label, test in zip(dataset.inputs, dataset.labels, is_test):
                writer.writerow(["test" if test else "train", int(label), *[fmt_float(v) for v in row]])
        sidecar = {
            "schema_version": DATASET_SCHEMA_VERSION,
            "num_classes": dataset.num_classes,
            "input_dim": dataset.input_dim,
            "rows": len(dataset),
            "class_counts": dataset.class_counts(),
            **(metadata or {}),
        }
        path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    except OSError as e:
        raise FlatAttackError(f"could not write dataset: {e}", context={"path": str(path)}) from e
    logger.info("Wrote dataset with %d rows to %s", len(dataset), path)


def load_dataset(path: Path) -> Dataset:
    """Read a dataset written by ``save_dataset``."""
    path = Path(path)
    try:
        sidecar = json.loads(path.with_suffix(".json").read_text())
        with open(path, newline="") as f:
            rows = list(csv.reader(f))
    except OSError as e:
        raise FlatAttackError(f"could not read dataset: {e}", context={"path": str(path)}) from e
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"dataset sidecar is not valid JSON: {e}", field="sidecar") from e

    if sidecar.get("schema_version") != DATASET_SCHEMA_VERSION:
        raise ModelFormatError(
            f"unsupported dataset schema {sidecar.get('schema_version')!r}", field="schema_version"
        )
    if not rows or rows[0][:2] != ["split", "label"]:
        raise ModelFormatError("dataset CSV header is missing", field="header")
    d = len(rows[0]) - 2
    body = rows[1:]
    try:
        inputs = np.array([[float(v) for v in r[2:]] for r in body], dtype=np.float64).reshape(len(body), d)
        labels = np.array([int(r[1]) for r in body], dtype=np.int64)
        is_test = np.array([r[0] == "test" for r in body], dtype=bool)
    except (ValueError, IndexError) as e:
        raise ModelFormatError(f"malformed dataset row: {e}", field="rows") from e
    return Dataset(
        inputs=inputs,
        labels=labels,
        num_classes=int(sidecar["num_classes"]),
        is_test=is_test,
    )
