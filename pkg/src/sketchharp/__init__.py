"""Hierarchical auto-regressive sketch generation with stroke-level editing."""

__version__ = "0.1.0"
