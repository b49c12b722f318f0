"""Finite involutive quantales, Hilbert modules over them, and Morita witnesses."""

__version__ = "0.1.0"
