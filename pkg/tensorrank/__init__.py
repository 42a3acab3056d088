"""Exact-arithmetic workbench for order-3 tensor rank and rank additivity."""

__version__ = "0.1.0"
