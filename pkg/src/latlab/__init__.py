"""Numerical laboratory for short vectors of random lattices."""
__version__ = "0.1.0"
