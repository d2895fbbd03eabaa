"""Numerical laboratory for smooth vectors of the conjugation representation
of the Heisenberg group on Schatten ideals."""

__version__ = "0.1.0"
