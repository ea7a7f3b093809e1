"""Desk-scale example bodies with their expected verdicts.

Entries are built by identifier. Each carries the body, a default linear map
for sections and cross-checks, the expected LNC verdict and notes on the
expected section behaviour. Random certified-class instances (polytopes,
zonotopes, maps) are generated here too so that tests share one source.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .bodies.base import Body
from .bodies.combinators import Intersection, Product, Suspension, Translate
from .bodies.polytopes import HPolytope, VPolytope, Zonotope
from .bodies.smooth import Ball, Epigraph19, PSDCap2
from .linalg import LinearMap
from .lnc import LNCWitness, make_witness


class Verdict(str, enum.Enum):
    LNC_NO_WITNESS = "LNC_NO_WITNESS"
    NOT_LNC_WITNESS = "NOT_LNC_WITNESS"
    LIMIT_FAMILY = "LIMIT_FAMILY"


class UnknownEntryError(KeyError):
    code = "UNKNOWN_ENTRY"


@dataclass(frozen=True)
class SectionNote:
    method: str
    path: str
    jump_min: float | None = None
    jump_max: float | None = None


@dataclass(frozen=True)
class GalleryEntry:
    identifier: str
    body: Body
    T: LinearMap
    verdict: Verdict
    reference: str
    notes: tuple = ()
    params: dict = field(default_factory=dict)


# -- random certified-class instances -------------------------------------------


def random_hpolytope(rng, dim: int = 3, facets: int = 8) -> HPolytope:
    """Bounded intersection of ``facets`` half-spaces at distance 0.5..1.5 from the origin."""
    if facets <= dim:
        raise ValueError("a bounded polytope needs more facets than the dimension")
    while True:
        A = rng.standard_normal((facets, dim))
        A /= np.linalg.norm(A, axis=1)[:, None]
        P = HPolytope(A, rng.uniform(0.5, 1.5, facets))
        if P.is_bounded:
            return P


def random_vpolytope(rng, dim: int = 4, vertices: int = 10) -> VPolytope:
    return VPolytope(rng.standard_normal((vertices, dim)))


def random_zonotope(rng, dim: int = 4, generators: int = 6) -> Zonotope:
    return Zonotope(0.1 * rng.standard_normal(dim), rng.standard_normal((generators, dim)))


def random_map(rng, rows: int, cols: int) -> LinearMap:
    """Random map of full row rank."""
    while True:
        M = rng.standard_normal((rows, cols))
        if np.linalg.matrix_rank(M) == rows:
            return LinearMap(M)


# -- named maps -------------------------------------------------------------------


def named_map(spec: str, dim: int) -> LinearMap:
    """``proj-xy`` (first two coordinates), ``x`` (first coordinate) or ``x+y``."""
    if spec == "proj-xy":
        return LinearMap(np.eye(dim)[:2])
    if spec == "x":
        return LinearMap(np.eye(dim)[:1])
    if spec == "x+y":
        row = np.zeros((1, dim))
        row[0, :2] = 1.0
        return LinearMap(row)
    raise ValueError(f"unknown map shorthand {spec!r}")


# -- helix ---------------------------------------------------------------------------


def helix_points(n: int) -> np.ndarray:
    t = 2.0 * np.pi * np.arange(n) / (n - 1)
    return np.column_stack([np.cos(t), np.sin(t), t])


def helix_boundary_point(n: int, angle: float) -> np.ndarray:
    """Point at polar angle ``angle`` on the boundary of the projected helix polygon."""
    h = 2.0 * np.pi / (n - 1)
    a = angle % (2.0 * np.pi)
    i = min(int(a // h), n - 2)
    p0 = np.array([math.cos(i * h), math.sin(i * h)])
    p1 = np.array([math.cos((i + 1) * h), math.sin((i + 1) * h)])
    u = np.array([math.cos(angle), math.sin(angle)])
    # solve r u = p0 + s (p1 - p0)
    M = np.column_stack([u, p0 - p1])
    r, _ = np.linalg.solve(M, p0)
    return r * u


def helix_path(n: int, span: float = 0.5) -> list[np.ndarray]:
    """Projected sample vertices at angles in [-span, 0), then the endpoint (1, 0).

    Between samples the boundary of the projected polygon is a chord, and over
    the last chord the hull has a vertical triangle, so the finite section is
    continuous; the jump shows up between the last sample before angle 0 and
    the endpoint.
    """
    h = 2.0 * np.pi / (n - 1)
    k = int(np.floor(span / h + 1e-12))
    angles = -h * np.arange(k, 0, -1)
    return [np.array([math.cos(a), math.sin(a)]) for a in angles] + [np.array([1.0, 0.0])]


def cone_path(steps: int = 50) -> list[np.ndarray]:
    """Rim path ``(1 - cos t, sin t)``, t from 1.0 down to 0.01, then the apex image (0, 0)."""
    ts = np.linspace(1.0, 0.01, steps)
    return [np.array([1.0 - math.cos(t), math.sin(t)]) for t in ts] + [np.zeros(2)]


def epigraph_path(steps: int = 50) -> list[np.ndarray]:
    return [np.array([x]) for x in np.linspace(0.2, 0.0, steps)]


# -- entries -----------------------------------------------------------------------------


def _square():
    A = np.vstack([np.eye(2), -np.eye(2)])
    return HPolytope(A, [1.0, 1.0, 0.0, 0.0])


def example13_body() -> Intersection:
    """(Q0 x [-10, 10]) cut by the radius-2 ball in R^4; Q0 is the cone over a unit circle."""
    q0 = Translate(Suspension(Ball(np.zeros(2), 1.0), height=-20.0), [0.0, 0.0, 10.0])
    interval = HPolytope([[1.0], [-1.0]], [10.0, 10.0])
    return Intersection(Product(q0, interval), Ball(np.zeros(4), 2.0))


def example13_slice() -> Intersection:
    """Intersection of the ``example13`` body with the hyperplane w = 0, as a body in R^3."""
    q0 = Translate(Suspension(Ball(np.zeros(2), 1.0), height=-20.0), [0.0, 0.0, 10.0])
    return Intersection(q0, Ball(np.zeros(3), 2.0))


def _build_ball(params):
    dim = int(params.get("dim", 3))
    body = Ball(np.zeros(dim), 1.0)
    return body, named_map("proj-xy", dim), Verdict.LNC_NO_WITNESS, "unit ball: strictly convex", ()


def _build_cone9(params):
    body = Suspension(Ball([1.0, 0.0], 1.0))
    notes = tuple(SectionNote(m, "rim circle toward the apex image", 0.99, 1.01)
                  for m in ("gv-lowest", "min-norm", "gamma"))
    return (body, named_map("proj-xy", 3), Verdict.NOT_LNC_WITNESS,
            "cone over the disk of radius 1 centred at (1, 0): hull of the rim and the origin", notes)


def _build_helix10(params):
    n = int(params.get("N", 128))
    if n < 8:
        raise ValueError("helix sample count N must be at least 8")
    body = VPolytope(helix_points(n))
    notes = tuple(SectionNote(m, "sample vertices at angles -0.5 -> 0, then (1, 0)", 6.0, 2 * np.pi)
                  for m in ("min-norm", "gamma"))
    return (body, named_map("proj-xy", 3), Verdict.LIMIT_FAMILY,
            "hull of N samples of the helix (cos t, sin t, t), 0 <= t <= 2 pi", notes)


def _build_psd12(params):
    T = LinearMap([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    return (PSDCap2(), T, Verdict.NOT_LNC_WITNESS,
            "2x2 symmetric matrices 0 <= A <= I as (a, b, c)", ())


def _build_prop11(params):
    base = params.get("base", "disk")
    sides = int(params.get("sides", 32))
    if base == "disk":
        body = Suspension(Ball(np.zeros(2), 1.0))
        verdict = Verdict.NOT_LNC_WITNESS
    elif base == "polygon":
        t = 2.0 * np.pi * np.arange(sides) / sides
        body = Suspension(VPolytope(np.column_stack([np.cos(t), np.sin(t)])))
        verdict = Verdict.LNC_NO_WITNESS
    else:
        raise ValueError("prop11 base must be 'disk' or 'polygon'")
    return (body, named_map("proj-xy", 3), verdict,
            "suspension of a compact convex base: LNC exactly when the base is a polytope", ())


def _build_example13(params):
    return (example13_body(), named_map("proj-xy", 4), Verdict.NOT_LNC_WITNESS,
            "product of a cone with an interval, cut by the radius-2 ball; no one-dimensional faces", ())


def _build_epigraph19(params):
    notes = (SectionNote("gamma", "x from 0.2 down to 0", 4.0, None),)
    return (Epigraph19(), named_map("x", 3), Verdict.LNC_NO_WITNESS,
            "unbounded LNC body with lexicographic section (x, 0, 1/x) for x > 0", notes)


def _build_polytope(params):
    rng = np.random.default_rng([int(params.get("seed", 7)), 1])
    body = random_vpolytope(rng, 4, int(params.get("vertices", 10)))
    return body, random_map(rng, 2, 4), Verdict.LNC_NO_WITNESS, "random V-polytope in R^4", ()


def _build_square(params):
    notes = (SectionNote("gamma", "x from 0.1 to 0.9", None, 0.1),)
    return _square(), named_map("x", 2), Verdict.LNC_NO_WITNESS, "unit square", notes


def _build_zonotope(params):
    rng = np.random.default_rng([int(params.get("seed", 7)), 2])
    body = random_zonotope(rng, 4, int(params.get("generators", 6)))
    return body, random_map(rng, 2, 4), Verdict.LNC_NO_WITNESS, "random zonotope in R^4", ()


_BUILDERS = {
    "ball": _build_ball,
    "cone9": _build_cone9,
    "epigraph19": _build_epigraph19,
    "example13": _build_example13,
    "helix10": _build_helix10,
    "polytope": _build_polytope,
    "prop11": _build_prop11,
    "psd12": _build_psd12,
    "square": _build_square,
    "zonotope": _build_zonotope,
}


def identifiers() -> list[str]:
    return sorted(_BUILDERS)


def build(identifier: str, **params) -> GalleryEntry:
    try:
        builder = _BUILDERS[identifier]
    except KeyError:
        raise UnknownEntryError(f"unknown gallery identifier {identifier!r}") from None
    body, T, verdict, ref, notes = builder(params)
    return GalleryEntry(identifier, body, T, verdict, ref, notes, dict(params))


# -- explicit witnesses ----------------------------------------------------------------

# the explicit sequences converge to x and are tested at the half shift
# x_t + (x' - x)/2, so the grid is {1/2} and the base point is x
_HALF = [0.5]


def expected_witness(identifier: str) -> LNCWitness:
    """Explicit falsifying data for entries whose non-LNC status has a closed form."""
    if identifier == "cone9":
        body = build("cone9").body
        qs = [[1.0 - math.cos(1.0 / n), math.sin(1.0 / n), 1.0] for n in (2, 4, 8, 16)]
        x, xp = [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]
    elif identifier == "psd12":
        body = build("psd12").body
        # t (1 - t) avoids the cancellation in t - t^2 near t = 1
        qs = [[t, math.sqrt(t * (1.0 - t)), 1.0 - t] for t in (0.9, 0.99, 0.999)]
        x, xp = [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]
    elif identifier == "prop11":
        body = build("prop11").body
        angles = [2.0 * math.pi / 32 / 2 ** j for j in range(4)]
        qs = [[math.cos(a), math.sin(a), 1.0] for a in angles]
        x, xp = [1.0, 0.0, 1.0], [0.0, 0.0, 0.0]
    else:
        if identifier not in _BUILDERS:
            raise UnknownEntryError(f"unknown gallery identifier {identifier!r}")
        raise ValueError(f"gallery entry {identifier!r} has no explicit witness")
    return make_witness(body, x, xp, qs, _HALF, base=x, form="shift")
