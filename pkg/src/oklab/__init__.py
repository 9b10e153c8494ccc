"""Okounkov bodies, concave transforms and arithmetic volumes over adelic curves."""
from . import adelic_core, concave_transform, convex_geom, graded_okounkov, toric_testbed

__all__ = ["adelic_core", "concave_transform", "convex_geom", "graded_okounkov", "toric_testbed"]
__version__ = "0.1.0"
