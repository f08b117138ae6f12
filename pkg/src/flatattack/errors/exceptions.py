"""Error taxonomy for the FLATATTACK system."""

import logging

logger = logging.getLogger(__name__)


class FlatAttackError(Exception):
    """Base exception for all FLATATTACK errors."""

    def __init__(self, message: str, context: dict | None = None):
        super().__init__(message)
        self.context = context or {}


class ConfigError(FlatAttackError):
    """Malformed configuration or an invalid selection on the command line.

    These are usage errors: the run never started.
    """

    def __init__(
        self,
        message: str,
        key: str | None = None,
        context: dict | None = None,
    ):
        super().__init__(message, context)
        self.key = key


class ShapeError(FlatAttackError):
    """Dimension or class-count mismatch between vectors, models or datasets."""

    def __init__(
        self,
        message: str,
        expected: object = None,
        actual: object = None,
        context: dict | None = None,
    ):
        super().__init__(message, context)
        self.expected = expected
        self.actual = actual


class ModelFormatError(FlatAttackError):
    """A model, dataset or adversarial-set file could not be decoded.

    ``field`` names the first field that failed to parse.
    """

    def __init__(
        self,
        message: str,
        field: str = "unknown",
        context: dict | None = None,
    ):
        super().__init__(message, context)
        self.field = field


class DomainError(FlatAttackError):
    """The request lies outside the operation's mathematical domain."""

    def __init__(
        self,
        message: str,
        reason: str = "unknown",
        context: dict | None = None,
    ):
        super().__init__(message, context)
        self.reason = reason  # 'dimension_too_large', 'not_smooth', 'empty_denominator', ...


class ExperimentError(FlatAttackError):
    """Harness preconditions do not hold (untrained zoo member, zoo too small)."""

    def __init__(
        self,
        message: str,
        reason: str = "unknown",
        context: dict | None = None,
    ):
        super().__init__(message, context)
        self.reason = reason


EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def exit_code_for(error: Exception) -> int:
    """Route an error to a process exit code, logging it at the matching level.

    Args:
        error: The error that stopped the command.

    Returns:
        2 for configuration/usage errors, 1 for everything else.
    """
    if isinstance(error, ConfigError):
        logger.error("Configuration error: %s", error)
        return EXIT_USAGE

    if isinstance(error, ModelFormatError):
        logger.error("Malformed file (field=%s): %s", error.field, error)
        return EXIT_RUNTIME

    if isinstance(error, (ShapeError, DomainError, ExperimentError)):
        logger.error("%s: %s", type(error).__name__, error)
        return EXIT_RUNTIME

    if isinstance(error, FlatAttackError):
        logger.error("Error: %s %s", error, error.context or "")
        return EXIT_RUNTIME

    logger.exception("Unexpected failure: %s", error)
    return EXIT_RUNTIME
