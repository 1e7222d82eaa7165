"""Verification toolkit for variance and thin-shell statistics of projected polytopes."""

__version__ = "0.1.0"
