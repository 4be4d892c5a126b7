"""Numerical laboratory for second-kind integral equations with bi-Carleman kernels."""

__version__ = "0.1.0"
