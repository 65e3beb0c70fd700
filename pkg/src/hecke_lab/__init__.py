"""Hecke orbit covering experiments on SL_n(R)/SO_n(R) and their p-adic spectral side."""

__version__ = "0.1.0"
