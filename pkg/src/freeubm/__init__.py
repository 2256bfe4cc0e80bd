"""Moments of the compression of a free unitary Brownian motion by a free projection."""

__version__ = "0.1.0"
