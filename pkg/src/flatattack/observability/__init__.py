"""Observability and logging for the FLATATTACK system."""

from flatattack.observability.logging import (
    AttackObserver,
    LoggingObserver,
    NullObserver,
    OutputSettings,
    configure_logging,
)

__all__ = [
    "AttackObserver",
    "LoggingObserver",
    "NullObserver",
    "OutputSettings",
    "configure_logging",
]
