"""Attack-iteration observers and console logging setup.

Attack loops report every outer iteration to an ``AttackObserver``. The
default ``NullObserver`` does nothing; ``LoggingObserver`` logs each record
at DEBUG and keeps counters that the CLI prints at the end of a run.
"""

import logging
import threading
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Protocol

from pydantic_settings import BaseSettings, SettingsConfigDict
from rich.logging import RichHandler

if TYPE_CHECKING:
    from flatattack.attacks.trace import IterationRecord

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s [%(name)s] %(levelname)s: %(message)s"


class OutputSettings(BaseSettings):
    """Presentation-only settings read from FLATATTACK_* environment variables."""

    model_config = SettingsConfigDict(env_prefix="FLATATTACK_")

    verbosity: int = 0  # 0 info, 1 debug; negative values quieten to warnings
    color: bool = True


def configure_logging(settings: OutputSettings | None = None, verbose: int = 0) -> None:
    """Install a root handler; rich when color is enabled, plain text otherwise."""
    settings = settings or OutputSettings()
    level_index = settings.verbosity + verbose
    level = logging.DEBUG if level_index > 0 else logging.INFO if level_index == 0 else logging.WARNING

    root = logging.getLogger()
    for existing in list(root.handlers):
        if getattr(existing, "_flatattack", False):
            root.removeHandler(existing)

    if settings.color:
        handler: logging.Handler = RichHandler(show_path=False, rich_tracebacks=False)
        handler.setFormatter(logging.Formatter("%(message)s"))
    else:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
    handler._flatattack = True  # type: ignore[attr-defined]
    root.addHandler(handler)
    root.setLevel(level)


class AttackObserver(Protocol):
    """Protocol for observing attack iterations."""

    def on_iteration(self, algorithm: str, record: "IterationRecord") -> None:
        """Called after each outer iteration's momentum update."""
        ...


class NullObserver:
    """No-op observer (the default, and for tests)."""

    def on_iteration(self, algorithm: str, record: "IterationRecord") -> None:
        pass


@dataclass
class LoggingObserver:
    """Logs iterations and counts degenerate updates and sign flips.

    Safe to share between worker threads.
    """

    iterations: int = 0
    degenerate: int = 0
    negative_alignment: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def on_iteration(self, algorithm: str, record: "IterationRecord") -> None:
        with self._lock:
            self.iterations += 1
            if record.degenerate:
                self.degenerate += 1
            if record.cos_align_g0 < 0:
                self.negative_alignment += 1
        logger.debug(
            "%s t=%d adv_loss=%.5f g_l1=%.3e cos=%.3f std=%.3e m_l1=%.3e%s",
            algorithm,
            record.t,
            record.adv_loss,
            record.g_l1,
            record.cos_align_g0,
            record.loss_std,
            record.momentum_l1,
            " degenerate" if record.degenerate else "",
        )

    def summary(self) -> str:
        return (
            f"{self.iterations} iterations, {self.degenerate} degenerate, "
            f"{self.negative_alignment} with negative alignment"
        )
