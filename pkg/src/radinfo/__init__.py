"""Radii of information: worst-case, probabilistic and p-average settings."""

__version__ = "0.1.0"
