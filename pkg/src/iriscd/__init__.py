"""Iterative retrieval and hybrid causal discovery."""

__version__ = "0.1.0"
