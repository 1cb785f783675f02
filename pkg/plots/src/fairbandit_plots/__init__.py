"""Offline figures from fairbandit CSV outputs."""

__version__ = "0.1.0"
