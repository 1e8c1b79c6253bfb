"""Numerical laboratory for boundary point estimates of elliptic equations."""

__version__ = "0.1.0"
