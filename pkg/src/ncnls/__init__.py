"""Noncommutative NLS numerics in the truncated Fock basis."""

__version__ = "0.1.0"
