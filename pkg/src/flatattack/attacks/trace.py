"""Per-iteration attack traces and their CSV export."""

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from flatattack.errors import FlatAttackError
from flatattack.models.dataset import fmt_float

TRACE_COLUMNS = ("t", "adv_loss", "g_l1", "cos_align_g0", "loss_std_over_samples", "momentum_l1")


@dataclass(frozen=True)
class IterationRecord:
    """One outer iteration.

    ``adv_loss`` is L^adv at the iterate the step starts from, ``g_l1`` the L1
    norm of the accumulated update direction and ``cos_align_g0`` its cosine
    with the mean plain gradient over the inner samples.
    """

    t: int
    adv_loss: float
    g_l1: float
    cos_align_g0: float
    sample_losses: tuple[float, ...]
    momentum_l1: float
    degenerate: bool = False

    @property
    def loss_std(self) -> float:
        """Population standard deviation of the inner-sample losses."""
        return float(np.std(self.sample_losses))


@dataclass
class AttackTrace:
    algorithm: str
    model_id: str
    records: list[IterationRecord] = field(default_factory=list)
    # x_adv^0 .. x_adv^T; the budget and box constraints hold for each one
    iterates: list[np.ndarray] = field(default_factory=list, repr=False)

    def append(self, record: IterationRecord) -> None:
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def loss_std_curve(self) -> list[float]:
        return [r.loss_std for r in self.records]

    @property
    def negative_alignment_count(self) -> int:
        return sum(1 for r in self.records if r.cos_align_g0 < 0)

    @property
    def degenerate_count(self) -> int:
        return sum(1 for r in self.records if r.degenerate)

    def rows(self) -> list[list[str]]:
        return [
            [
                str(r.t),
                fmt_float(r.adv_loss),
                fmt_float(r.g_l1),
                fmt_float(r.cos_align_g0),
                fmt_float(r.loss_std),
                fmt_float(r.momentum_l1),
            ]
            for r in self.records
        ]


def export_trace_csv(trace: AttackTrace, path: Path) -> Path:
    """Write one trace as CSV with the fixed column set."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(TRACE_COLUMNS)
            writer.writerows(trace.rows())
    except OSError as e:
        raise FlatAttackError(f"could not write trace: {e}", context={"path": str(path)}) from e
    return path
