"""Biorthogonal quantum mechanics and quench dynamics of the non-Hermitian SSH chain."""

__version__ = "0.1.0"
