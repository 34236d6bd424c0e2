"""Simulation and verification tools for random rank-one operator iterations."""

__version__ = "0.1.0"
