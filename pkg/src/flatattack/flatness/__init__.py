"""Flatness estimators, curvature oracle and loss-landscape exports."""

from flatattack.flatness.curvature import hvp_oracle
from flatattack.flatness.estimators import (
    FlatnessEstimate,
    adversarial_flatness,
    estimate_flatness,
    estimate_psi0,
    estimate_psi1,
)
from flatattack.flatness.surface import SurfaceGrid, export_surface, loss_surface_grid
from flatattack.flatness.vicinity import VicinityReport, check_vicinity_bound, grid_flatness

__all__ = [
    "FlatnessEstimate",
    "SurfaceGrid",
    "VicinityReport",
    "adversarial_flatness",
    "check_vicinity_bound",
    "estimate_flatness",
    "estimate_psi0",
    "estimate_psi1",
    "export_surface",
    "grid_flatness",
    "hvp_oracle",
    "loss_surface_grid",
]
