"""Numerical verification lab for bilinear frequency-space estimates."""

__version__ = "0.1.0"
