"""Nested loops on random planar triangulations: exact series, brute-force
census, elliptic solution and large-deviation rates."""

__version__ = "0.1.0"
