"""Planar torsion log-Minkowski problem: forward torsion measures of convex
polygons and the inverse problem of prescribing the cone-torsion measure."""

from .errors import TorlogError
from .geometry import DiscreteSphericalMeasure, Polygon, wulff_shape
from .solver import SolveOptions, SolveReport, solve_discrete

__all__ = ["DiscreteSphericalMeasure", "Polygon", "SolveOptions", "SolveReport", "TorlogError", "solve_discrete", "wulff_shape"]
__version__ = "0.1.0"
