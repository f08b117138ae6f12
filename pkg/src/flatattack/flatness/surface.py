"""Loss surfaces along two random orthonormal directions, plus CSV/JSON export."""

import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from flatattack.errors import DomainError, FlatAttackError
from flatattack.flatness.vicinity import axis_points
from flatattack.models.base import LossSurface
from flatattack.models.dataset import fmt_float
from flatattack.numerics import FeatureVector, SeededRng

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SurfaceGrid:
    direction_a: np.ndarray
    direction_b: np.ndarray
    range: float
    resolution: int
    losses: np.ndarray  # resolution x resolution, rows follow direction_a
    center_loss: float
    seed: int

    @property
    def coordinates(self) -> np.ndarray:
        return axis_points(self.range, self.resolution)


def random_directions(rng: SeededRng, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Two orthonormal directions from Gaussian draws (QR orthonormalization)."""
    if d < 2:
        raise DomainError(f"a 2-D surface needs input dimension >= 2, got {d}", reason="dimension_too_small")
    q, _ = np.linalg.qr(rng.normal((d, 2)))
    return q[:, 0].copy(), q[:, 1].copy()


def loss_surface_grid(
    model: LossSurface,
    x_adv: FeatureVector,
    y: int,
    rng: SeededRng,
    range_: float,
    resolution: int,
    threads: int = 1,
) -> SurfaceGrid:
    """Loss on the (2 * range_)-wide grid centred at x_adv.

    Every point goes through the single-input loss so the centre entry equals
    ``model.loss(x_adv, y)`` exactly. Rows may be filled in parallel; each
    worker writes a disjoint row.
    """
    if resolution < 3 or resolution % 2 == 0:
        raise DomainError(f"resolution must be odd and >= 3, got {resolution}", reason="resolution")
    if range_ <= 0:
        raise DomainError(f"range must be positive, got {range_}", reason="range")
    u, v = random_directions(rng, x_adv.shape[0])
    coords = axis_points(range_, resolution)
    losses = np.empty((resolution, resolution))

    def fill_row(i: int) -> None:
        for j in range(resolution):
            losses[i, j] = model.loss(x_adv + coords[i] * u + coords[j] * v, y)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill_row, range(resolution)))
    else:
        for i in range(resolution):
            fill_row(i)

    mid = resolution // 2
    return SurfaceGrid(
        direction_a=u,
        direction_b=v,
        range=range_,
        resolution=resolution,
        losses=losses,
        center_loss=float(losses[mid, mid]),
        seed=rng.master_seed,
    )


def export_surface(grid: SurfaceGrid, out_dir: Path, stem: str = "surface") -> tuple[Path, Path]:
    """Write ``<stem>.csv`` (row-major matrix) and ``<stem>.json`` (directions)."""
    out_dir = Path(out_dir)
    csv_path = out_dir / f"{stem}.csv"
    json_path = out_dir / f"{stem}.json"
    coords = grid.coordinates
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(csv_path, "w", newline="") as f:
            f.write(
                f"# range={fmt_float(grid.range)} resolution={grid.resolution} "
                f"seed={grid.seed} center_loss={fmt_float(grid.center_loss)}\n"
            )
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["a\\b", *[fmt_float(c) for c in coords]])
            for a, row in zip(coords, grid.losses):
                writer.writerow([fmt_float(a), *[fmt_float(v) for v in row]])
        sidecar = {
            "range": grid.range,
            "resolution": grid.resolution,
            "seed": grid.seed,
            "center_loss": grid.center_loss,
            "direction_a": [float(v) for v in grid.direction_a],
            "direction_b": [float(v) for v in grid.direction_b],
        }
        json_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    except OSError as e:
        raise FlatAttackError(f"could not write surface: {e}", context={"path": str(out_dir)}) from e
    logger.info("Wrote %dx%d loss surface to %s", grid.resolution, grid.resolution, csv_path)
    return csv_path, json_path
