"""Relaxation-type viscous compressible fluids: analysis and 1-D evolution."""

__version__ = "0.3.0"
