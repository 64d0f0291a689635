"""Comparison geometry on 2-spheres of revolution."""

__version__ = "0.1.0"
