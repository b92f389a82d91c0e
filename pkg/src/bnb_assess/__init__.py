"""Efficiency and scalability assessment for branch-and-bound run traces."""

__version__ = "0.1.0"
