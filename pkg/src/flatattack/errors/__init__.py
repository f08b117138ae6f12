"""Error taxonomy for the FLATATTACK system."""

from flatattack.errors.exceptions import (
    ConfigError,
    DomainError,
    ExperimentError,
    FlatAttackError,
    ModelFormatError,
    ShapeError,
    exit_code_for,
)

__all__ = [
    "FlatAttackError",
    "ConfigError",
    "ShapeError",
    "ModelFormatError",
    "DomainError",
    "ExperimentError",
    "exit_code_for",
]
