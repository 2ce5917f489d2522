"""Numerical laboratory for Funk and Hilbert geometry of convex bodies."""

__version__ = "0.1.0"
