"""Numerical laboratory for Delta (A_1)^N as a Fourier multiplier on modulation spaces."""

__version__ = "0.1.0"
