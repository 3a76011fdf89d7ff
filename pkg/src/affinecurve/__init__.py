"""Affine arclength, Oberlin-type affine measure and uniform restriction on convex curves."""

__version__ = "0.1.0"
