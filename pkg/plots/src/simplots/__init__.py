"""Figures from uplink-streaming simulation CSV logs."""

__version__ = "0.1.0"

from .figures import KINDS, FigureSpec, SchemaError, compute_cdf, render

__all__ = ["KINDS", "FigureSpec", "SchemaError", "compute_cdf", "render"]
