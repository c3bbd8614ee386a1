"""Directed-search minimum wage and tax policy engine."""

__version__ = "0.1.0"
