"""Generalized Hermite kernels, discrete chaos processes and their limits."""

__version__ = "0.1.0"
