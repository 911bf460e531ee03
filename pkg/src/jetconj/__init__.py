"""Polynomial-jet conjugacy toolkit for sequences of attracting maps."""

__version__ = "0.1.0"
