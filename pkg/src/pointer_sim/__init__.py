"""Pointer-state simulation: pre-measurement, phase damping and envariance."""

__version__ = "0.1.0"
