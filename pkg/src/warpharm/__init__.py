"""Harmonicity of unit vector fields on warped products of an interval with a 3-dimensional Lie group."""

__version__ = "0.1.0"
