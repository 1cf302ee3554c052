"""Averaged dynamics of a pendulum with a fast-vibrating suspension point."""
__version__ = "0.1.0"
