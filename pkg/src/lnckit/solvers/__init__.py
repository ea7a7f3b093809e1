"""Linear programming, polyhedral projection, cutting planes and fibers."""

from .qp import InfeasibleError, Projection, project_polyhedron
from .simplex import LPResult, LPStatus, SolverError, lp_minimize

__all__ = [
    "InfeasibleError",
    "LPResult",
    "LPStatus",
    "Projection",
    "SolverError",
    "lp_minimize",
    "project_polyhedron",
]
