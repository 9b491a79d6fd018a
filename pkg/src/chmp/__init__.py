"""First-order solvers for the convex hull membership problem."""

from .geometry import PointSet, build_query
from .solvers import SolverConfig, solve

__version__ = "0.1.0"

__all__ = ["PointSet", "build_query", "SolverConfig", "solve", "__version__"]
