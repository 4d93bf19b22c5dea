"""Numerical laboratory for a nonlocal regularization of scalar conservation laws."""

__version__ = "0.1.0"
