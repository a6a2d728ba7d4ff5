"""Statistical-stability laboratory for piecewise-expanding skew products."""

__version__ = "0.1.0"
