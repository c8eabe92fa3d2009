"""Simulation and diagnostics for noisy quantum evolutions."""

__version__ = "0.1.0"
