"""Continuous sections of restricted linear maps and numerical LNC certification."""

from .bodies import (
    AffineImage,
    Ball,
    Body,
    Ellipsoid,
    Epigraph19,
    HPolytope,
    Intersection,
    Membership,
    Product,
    PSDCap2,
    Suspension,
    Translate,
    VPolytope,
    Zonotope,
    line_extent,
)
from .config import DEFAULT, ToolConfig
from .linalg import LinearMap, quotient_map
from .lnc import (
    CrosscheckReport,
    LNCWitness,
    NoWitnessFound,
    OpennessReport,
    lnc_search,
    lnc_verdict_crosscheck,
    openness_probe,
    segment_test,
)
from .sections import (
    FunctionalFamily,
    GvMode,
    Section,
    probe_continuity,
    section_gamma,
    section_gv,
    section_min_norm,
)
from .solvers.fiber import EmptyFiberError, Fiber, make_fiber, min_norm_over_fiber

__version__ = "0.1.0"

__all__ = [
    "AffineImage",
    "Ball",
    "Body",
    "CrosscheckReport",
    "DEFAULT",
    "Ellipsoid",
    "EmptyFiberError",
    "Epigraph19",
    "Fiber",
    "FunctionalFamily",
    "GvMode",
    "HPolytope",
    "Intersection",
    "LNCWitness",
    "LinearMap",
    "Membership",
    "NoWitnessFound",
    "OpennessReport",
    "PSDCap2",
    "Product",
    "Section",
    "Suspension",
    "ToolConfig",
    "Translate",
    "VPolytope",
    "Zonotope",
    "lnc_search",
    "lnc_verdict_crosscheck",
    "line_extent",
    "make_fiber",
    "min_norm_over_fiber",
    "openness_probe",
    "probe_continuity",
    "quotient_map",
    "section_gamma",
    "section_gv",
    "section_min_norm",
    "segment_test",
]
