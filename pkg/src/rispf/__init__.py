"""Randomized-RIS downlink simulator with proportional-fair scheduling."""

__version__ = "0.1.0"
