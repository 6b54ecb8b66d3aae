"""Counterfactual debiasing laboratory for multimodal sentiment regression."""

__version__ = "0.1.0"

from . import errors  # noqa: F401
