"""Exact elliptic genera of toric varieties and Calabi-Yau hypersurfaces."""

__version__ = "0.1.0"
