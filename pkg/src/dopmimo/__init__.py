"""Uplink multi-cell massive MIMO with independent vs. reused orthogonal pilots."""

__version__ = "0.1.0"
