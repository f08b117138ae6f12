"""FLATATTACK: transferable adversarial examples from flat regions of the surrogate loss."""

__version__ = "0.1.0"
