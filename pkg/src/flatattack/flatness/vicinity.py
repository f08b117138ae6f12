"""Grid brute force for low-dimensional flatness and the vicinity bound.

The vicinity bound says that for every offset v with ||v|| <= xi,

    L^adv(x_adv + v) <= L^adv(x_adv) + psi_af(x_adv)

It follows from the mean value theorem and Cauchy-Schwarz, which bound the
increase by ||v||_2 times the largest gradient norm, so the check runs over
the grid points inside the L2 ball of radius xi and computes psi0 and psi1
from the same points.
"""

import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np

from flatattack.errors import DomainError
from flatattack.flatness.estimators import adversarial_flatness, chunked
from flatattack.models.base import LossSurface
from flatattack.numerics import FeatureVector

logger = logging.getLogger(__name__)

MAX_GRID_DIM = 3
MIN_GRID_POINTS = 11


@dataclass(frozen=True)
class VicinityReport:
    violations: int
    total: int
    max_excess: float
    psi0: float
    psi1: float
    psi_af: float
    beta_f: float
    xi: float


def axis_points(xi: float, n_grid: int) -> np.ndarray:
    """Evenly spaced points on [-xi, xi] whose middle entry is exactly 0 for odd n_grid."""
    pts = np.linspace(-xi, xi, n_grid)
    if n_grid % 2 == 1:
        pts[n_grid // 2] = 0.0
    return pts


def grid_offsets(d: int, xi: float, n_grid: int, ball: Literal["linf", "l2"] = "linf") -> np.ndarray:
    """All offsets of the n_grid^d cube grid, optionally restricted to the L2 ball."""
    if d > MAX_GRID_DIM:
        raise DomainError(
            f"grid brute force needs input dimension <= {MAX_GRID_DIM}, got {d}; refusing to subsample",
            reason="dimension_too_large",
        )
    if n_grid < MIN_GRID_POINTS:
        raise DomainError(f"need at least {MIN_GRID_POINTS} grid points per axis, got {n_grid}", reason="grid")
    axes = np.meshgrid(*([axis_points(xi, n_grid)] * d), indexing="ij")
    offsets = np.stack([a.ravel() for a in axes], axis=1)
    if ball == "l2":
        offsets = offsets[np.linalg.norm(offsets, axis=1) <= xi * (1.0 + 1e-12)]
    return offsets


def _grid_values(model: LossSurface, x_adv: FeatureVector, y: int, offsets: np.ndarray):
    points = x_adv + offsets
    adv = -chunked(model.loss_batch, points, y)
    grad_norms = np.linalg.norm(chunked(model.gradient_batch, points, y), axis=1)
    return adv, grad_norms


def grid_flatness(
    model: LossSurface,
    x_adv: FeatureVector,
    y: int,
    xi: float,
    n_grid: int,
    ball: Literal["linf", "l2"] = "linf",
) -> tuple[float, float]:
    """Brute-force (psi0, psi1) over the grid, centre included."""
    offsets = grid_offsets(x_adv.shape[0], xi, n_grid, ball)
    adv, grad_norms = _grid_values(model, x_adv, y, offsets)
    centre = model.adversarial_loss(x_adv, y)
    psi0 = max(0.0, float(np.max(adv - centre)))
    psi1 = xi * max(float(np.linalg.norm(model.input_gradient(x_adv, y))), float(np.max(grad_norms)))
    return psi0, psi1


def check_vicinity_bound(
    model: LossSurface,
    x_adv: FeatureVector,
    y: int,
    xi: float,
    n_grid: int = 101,
    beta_f: float = 0.5,
    tol: float = 1e-9,
) -> VicinityReport:
    """Count grid points where the adversarial loss exceeds the flatness bound.

    Raises:
        DomainError: If the input dimension exceeds 3 or the grid is too coarse.
    """
    offsets = grid_offsets(x_adv.shape[0], xi, n_grid, ball="l2")
    adv, grad_norms = _grid_values(model, x_adv, y, offsets)
    centre = model.adversarial_loss(x_adv, y)

    increase = adv - centre
    psi0 = max(0.0, float(np.max(increase)))
    psi1 = xi * max(float(np.linalg.norm(model.input_gradient(x_adv, y))), float(np.max(grad_norms)))
    psi_af = adversarial_flatness(psi0, psi1, beta_f)

    excess = adv - (centre + psi_af)
    violations = int(np.count_nonzero(excess > tol))
    if violations:
        logger.warning(
            "Vicinity bound violated at %d/%d grid points (max excess %.3e, beta_f=%.2f)",
            violations,
            offsets.shape[0],
            float(np.max(excess)),
            beta_f,
        )
    return VicinityReport(
        violations=violations,
        total=int(offsets.shape[0]),
        max_excess=float(np.max(excess)),
        psi0=psi0,
        psi1=psi1,
        psi_af=psi_af,
        beta_f=beta_f,
        xi=xi,
    )
