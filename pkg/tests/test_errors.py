"""Tests for the error taxonomy, exit-code routing and logging setup."""

import logging

import pytest

from flatattack.attacks.trace import IterationRecord
from flatattack.errors import (
    ConfigError,
    DomainError,
    ExperimentError,
    FlatAttackError,
    ModelFormatError,
    ShapeError,
    exit_code_for,
)
from flatattack.observability import LoggingObserver, OutputSettings, configure_logging


class TestExitCodes:
    def test_config_error_is_usage(self):
        assert exit_code_for(ConfigError("bad", key="attack.eps")) == 2

    @pytest.mark.parametrize(
        "error",
        [
            ShapeError("dims", expected=2, actual=3),
            DomainError("too big", reason="dimension_too_large"),
            ModelFormatError("short", field="trailer"),
            ExperimentError("zoo", reason="zoo_too_small"),
            FlatAttackError("generic", context={"path": "x"}),
        ],
    )
    def test_runtime_errors(self, error):
        assert exit_code_for(error) == 1

    def test_unexpected_exception(self, caplog):
        with caplog.at_level(logging.ERROR):
            assert exit_code_for(RuntimeError("boom")) == 1
        assert "boom" in caplog.text

    def test_config_error_logged(self, caplog):
        with caplog.at_level(logging.ERROR):
            exit_code_for(ConfigError("unknown key: epz (in section 'attack')"))
        assert "unknown key: epz" in caplog.text


class TestAttributes:
    def test_all_derive_from_base(self):
        for cls in (ConfigError, ShapeError, ModelFormatError, DomainError, ExperimentError):
            assert issubclass(cls, FlatAttackError)

    def test_fields(self):
        assert ConfigError("m", key="k").key == "k"
        assert ModelFormatError("m", field="bias[1]").field == "bias[1]"
        assert DomainError("m", reason="not_smooth").reason == "not_smooth"
        err = ShapeError("m", expected=4, actual=5)
        assert (err.expected, err.actual) == (4, 5)

    def test_context_defaults_empty(self):
        assert FlatAttackError("m").context == {}


# ===================================================================
# Logging
# ===================================================================


def _record(t: int, degenerate: bool = False, cos: float = 0.5) -> IterationRecord:
    return IterationRecord(
        t=t,
        adv_loss=-1.0,
        g_l1=0.0 if degenerate else 1.0,
        cos_align_g0=cos,
        sample_losses=(-1.0, -1.0),
        momentum_l1=1.0,
        degenerate=degenerate,
    )


class TestLogging:
    def test_levels(self):
        configure_logging(OutputSettings(verbosity=0, color=False))
        assert logging.getLogger().level == logging.INFO
        configure_logging(OutputSettings(verbosity=0, color=False), verbose=1)
        assert logging.getLogger().level == logging.DEBUG
        configure_logging(OutputSettings(verbosity=-1, color=False))
        assert logging.getLogger().level == logging.WARNING

    def test_reconfigure_keeps_one_handler_and_foreign_ones(self, caplog):
        configure_logging(OutputSettings(color=False))
        configure_logging(OutputSettings(color=True))
        ours = [h for h in logging.getLogger().handlers if getattr(h, "_flatattack", False)]
        assert len(ours) == 1
        assert caplog.handler in logging.getLogger().handlers

    def test_settings_from_environment(self, monkeypatch):
        monkeypatch.setenv("FLATATTACK_VERBOSITY", "1")
        monkeypatch.setenv("FLATATTACK_COLOR", "false")
        settings = OutputSettings()
        assert settings.verbosity == 1
        assert settings.color is False


class TestLoggingObserver:
    def test_counts(self):
        observer = LoggingObserver()
        observer.on_iteration("afa", _record(0))
        observer.on_iteration("afa", _record(1, degenerate=True))
        observer.on_iteration("afa", _record(2, cos=-0.2))
        assert observer.iterations == 3
        assert observer.degenerate == 1
        assert observer.negative_alignment == 1
        assert observer.summary() == "3 iterations, 1 degenerate, 1 with negative alignment"

    def test_debug_lines(self, caplog):
        with caplog.at_level(logging.DEBUG, logger="flatattack.observability.logging"):
            LoggingObserver().on_iteration("mi", _record(4, degenerate=True))
        assert "mi t=4" in caplog.text
        assert "degenerate" in caplog.text
