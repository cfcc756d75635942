"""Filtered Z/2 complexes, boundary depth, and computable quasi-flat models."""

__version__ = "0.1.0"
