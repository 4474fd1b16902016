"""Detect paid opinion-manipulation trolls from forum user behaviour."""

__version__ = "0.1.0"
