"""Numerical verification toolkit for the amplified trivial-delta method."""

__version__ = "0.1.0"
