"""Closest-point-of-approach statistics between infrastructure feature classes."""

__version__ = "0.1.0"
