"""Numerical toolkit for scattering Lagrangian distributions."""

__version__ = "0.1.0"
