"""Discrete-velocity solver and property checks for a two-species BGK mixture model."""

__version__ = "0.1.0"
