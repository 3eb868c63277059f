"""Benchmark GA, random search and grid search on a zero-sum shape-vector space."""

__version__ = "0.1.0"
