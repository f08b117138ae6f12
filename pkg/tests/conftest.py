"""Shared fixtures."""

import logging

import pytest


@pytest.fixture(autouse=True)
def _restore_root_logger():
    """Undo ``configure_logging`` between tests so caplog sees a clean root."""
    root = logging.getLogger()
    level = root.level
    yield
    root.setLevel(level)
    for handler in list(root.handlers):
        if getattr(handler, "_flatattack", False):
            root.removeHandler(handler)
