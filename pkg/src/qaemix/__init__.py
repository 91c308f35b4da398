"""Quantum autoencoders with mixed reference states."""

__version__ = "0.1.0"
