"""Synthetic manufacturing process data with matching procedural-knowledge graphs."""

__version__ = "0.1.0"
