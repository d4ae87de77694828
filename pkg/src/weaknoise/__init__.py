"""Error-cost exponents for estimating a vector parameter sent over an AWGN channel, with simulation tools."""

__version__ = "0.1.0"
