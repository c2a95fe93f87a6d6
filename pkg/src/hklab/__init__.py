"""Numerical laboratory for heat kernels of weighted-graph Laplacians."""

__version__ = "0.1.0"
