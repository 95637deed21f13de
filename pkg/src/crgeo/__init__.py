"""Numerical engine for three-dimensional pseudohermitian (CR) geometry."""

__version__ = "0.1.0"
