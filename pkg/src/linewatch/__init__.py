"""Lifecycle anomaly detection for legal e-billing line-items."""

__version__ = "0.1.0"
