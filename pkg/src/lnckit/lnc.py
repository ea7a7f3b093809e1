"""Numerical falsification of the locally-nonconical property and of openness.

A witness is a pair ``x, x'`` of points of Q, a base point ``b`` (the midpoint
of the pair for searched witnesses), approach points ``q_j`` INSIDE Q with
``||q_j - b||`` strictly decreasing, and for every ``q_j`` and every grid value
``e`` the OUTSIDE margins of ``q_j + e v`` and ``q_j - e v`` with
``v = x' - x``. The record is valid when at least one margin per ``(q_j, e)``
is at least ``mu``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .bodies.base import Body, HForm
from .bodies.extent import line_extent
from .bodies.combinators import (
    AffineImage,
    Intersection,
    Product,
    Suspension,
    Translate,
    UnsupportedImage,
    _block_hform,
)
from .bodies.smooth import Epigraph19
from .config import DEFAULT, ToolConfig
from .linalg import LinearMap, quotient_map
from .solvers.fiber import EmptyFiberError, make_fiber, min_norm_point
from .solvers.outer import EmptySetError, lexmin
from .solvers.simplex import SolverError

# face pairs project points at a random distance in this range (in diameters)
FAR_RANGE = (0.1, 1.0)
FAR_FACTOR = 2.0
# components shallower than this at a boundary point count as active
ACTIVE_DEPTH = 1e-7
# approach radius at the first scale, as a multiple of ||x' - x||
FIRST_SCALE = 1.0
SCALE_RATIO = 4.0
SAMPLES_PER_SCALE = 20
# the last scale stays below this fraction of the local feature radius
FEATURE_FRACTION = 0.9
# openness probes on the witness quotient map: radius as a fraction of |v|
# (the neighbourhood {phi > 3/4} of x' on the segment from the midpoint) and
# the number of targets over the three decades
WITNESS_RADIUS = 0.125
WITNESS_TARGETS = 60


def eps_grid(depth: int = 12) -> list[float]:
    """Step coefficients ``2^-1, ..., 2^-depth`` applied to ``v = x' - x``."""
    return [2.0 ** -k for k in range(1, depth + 1)]


def segment_margins(body: Body, q, v, grid) -> np.ndarray:
    """Violations of ``q + e v`` and ``q - e v`` for each ``e`` (shape ``len(grid) x 2``)."""
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    e = np.asarray(grid, dtype=float)[:, None]
    pts = np.vstack([q + e * v, q - e * v])
    viol = body.violations(pts)
    return np.stack([viol[: len(grid)], viol[len(grid):]], axis=1)


def segment_test(body: Body, q, v, grid, tol: float = 1e-9) -> bool:
    """True iff some ``e`` in ``grid`` has both ``q + e v`` and ``q - e v`` INSIDE."""
    if not np.any(v):
        raise ValueError("direction must be nonzero")
    m = segment_margins(body, q, v, grid)
    return bool(np.any(np.max(m, axis=1) <= tol))


def _fails(margins: np.ndarray, mu: float) -> bool:
    return bool(np.all(np.max(margins, axis=1) >= mu))


@dataclass
class LNCWitness:
    x: list
    x_prime: list
    base: list
    v: list
    grid: list
    approach: list
    margins: list
    mu: float = 1e-6
    tol: float = 1e-9
    form: str = "segment"
    seed: int | None = None
    pair_index: int | None = None
    scales: list = field(default_factory=list)

    found = True

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (np.asarray(self.x) + np.asarray(self.x_prime))

    def to_dict(self) -> dict:
        out = asdict(self)
        out["verdict"] = "NOT_LNC_WITNESS"
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "LNCWitness":
        data = {k: v for k, v in data.items() if k != "verdict"}
        return cls(**data)

    def check(self, body: Body) -> list[str]:
        """Re-verify the invariants against ``body``; returns a list of failures."""
        problems = []
        x, xp = np.asarray(self.x), np.asarray(self.x_prime)
        v = np.asarray(self.v)
        if body.violation(x) > self.tol or body.violation(xp) > self.tol:
            problems.append("pair point OUTSIDE")
        if not np.allclose(v, xp - x, rtol=0, atol=1e-12):
            problems.append("direction is not x' - x")
        if self.form == "segment" and not np.allclose(self.base, self.midpoint, rtol=0, atol=1e-12):
            problems.append("base is not the midpoint")
        if not self.approach:
            problems.append("no approach points")
        b = np.asarray(self.base)
        dists = [float(np.linalg.norm(np.asarray(q) - b)) for q in self.approach]
        if any(d2 >= d1 for d1, d2 in zip(dists, dists[1:])):
            problems.append("approach distances not strictly decreasing")
        for j, q in enumerate(self.approach):
            if body.violation(np.asarray(q)) > self.tol:
                problems.append(f"approach point {j} OUTSIDE")
            m = segment_margins(body, q, v, self.grid)
            if not _fails(m, self.mu):
                problems.append(f"approach point {j} lies inside a parallel segment")
            if not np.allclose(m, np.asarray(self.margins[j]), rtol=1e-9, atol=1e-15):
                problems.append(f"stored margins of point {j} do not match")
        return problems

    def verify(self, body: Body) -> bool:
        return not self.check(body)


@dataclass
class NoWitnessFound:
    pairs: int
    boundary_pairs: int
    degenerate: int
    seed: int

    found = False

    def to_dict(self) -> dict:
        out = asdict(self)
        out["verdict"] = "NO_WITNESS_FOUND"
        return out


def make_witness(body: Body, x, x_prime, approach, grid, base=None, form: str = "segment",
                 mu: float = 1e-6, tol: float = 1e-9, **extra) -> LNCWitness:
    """Assemble a witness record, computing margins from the body."""
    x = np.asarray(x, dtype=float)
    xp = np.asarray(x_prime, dtype=float)
    v = xp - x
    base = 0.5 * (x + xp) if base is None else np.asarray(base, dtype=float)
    margins = [segment_margins(body, q, v, grid).tolist() for q in approach]
    return LNCWitness(
        x.tolist(), xp.tolist(), base.tolist(), v.tolist(), list(grid),
        [np.asarray(q, dtype=float).tolist() for q in approach], margins, mu, tol, form, **extra,
    )


# -- search -------------------------------------------------------------------


def _unit(rng, n):
    u = rng.standard_normal(n)
    return u / np.linalg.norm(u)


class _Sampler:
    def __init__(self, body: Body, box=None):
        self.body = body
        lo, hi = body.bounding_box() if box is None else (np.asarray(box[0], float), np.asarray(box[1], float))
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("lnc_search needs a bounded body or an explicit search box")
        self.lo, self.hi = lo, hi
        self.diam = float(np.linalg.norm(hi - lo)) or 1.0
        self.center = body.interior_point()

    def uniform_point(self, rng, tries: int = 200):
        Z = rng.uniform(self.lo, self.hi, size=(tries, self.body.dim))
        inside = np.nonzero(self.body.violations(Z) <= 0.0)[0]
        return Z[inside[0]] if inside.size else None

    def uniform_pair(self, rng):
        x = self.uniform_point(rng)
        xp = self.uniform_point(rng)
        if x is None or xp is None:
            return None
        return x, xp

    def face_pair(self, rng):
        n_dim = self.body.dim
        far = self.center + rng.uniform(*FAR_RANGE) * self.diam * _unit(rng, n_dim)
        y = self.body.nearest(far)
        n = far - y
        nn = float(np.linalg.norm(n))
        if nn <= 1e-12 * self.diam:
            return None
        n /= nn
        w = rng.standard_normal(n_dim)
        w -= (w @ n) * n
        if np.linalg.norm(w) == 0.0:
            return None
        w /= np.linalg.norm(w)
        body = self.body
        if isinstance(body, Intersection) and body.hform() is None:
            return self._face_chord(y, n, w)
        return body.support_face(n, w), body.support_face(n, -w)

    def _face_chord(self, y, n, w):
        # the single component active at y exposes the face; its exact face
        # endpoints give an in-face direction, clipped to the intersection
        active = [b for b in self.body.bodies if b.violation(y) > -ACTIVE_DEPTH]
        if len(active) != 1:
            return None
        part = active[0]
        d = part.support_face(n, w) - part.support_face(n, -w)
        nd = float(np.linalg.norm(d))
        if nd <= 1e-9 * self.diam:
            return None
        d /= nd
        ext = line_extent(self.body, y, d)
        return y + ext.lo * d, y + ext.hi * d


def facet_rows(body: Body) -> HForm:
    """Inequalities that hold with equality on a full-dimensional boundary patch.

    Polyhedral bodies contribute their H-form; a curved suspension its top
    slice; the epigraph body its two flat facets. Outer bounds such as
    bounding boxes are not facets and are left out.
    """
    h = body.hform()
    if h is not None:
        return h
    if isinstance(body, Translate):
        return facet_rows(body.body).transformed(np.eye(body.dim), -body.shift)
    if isinstance(body, Product):
        return _block_hform([facet_rows(b) for b in body.bodies])
    if isinstance(body, Intersection):
        out = facet_rows(body.bodies[0])
        for part in body.bodies[1:]:
            out = out.stacked(facet_rows(part))
        return out
    if isinstance(body, Suspension):
        row = np.zeros((1, body.dim))
        row[0, -1] = np.sign(body.height)
        return HForm.build(row, [abs(body.height)])
    if isinstance(body, Epigraph19):
        return HForm.build([[1.0, 1.0, 0.0], [0.0, -1.0, 0.0]], [1.0, 0.0])
    return HForm.build(np.zeros((0, body.dim)), np.zeros(0), dim=body.dim)


def feature_radius(body: Body, p, v, tol: float = 1e-9) -> float:
    """Distance from ``p`` to the nearest facet or curved component slack at ``p`` and not parallel to ``v``.

    Approach points closer to ``p`` than this radius only meet the boundary
    pieces through ``p``, all of which are parallel to ``v`` when
    ``p +- v/2`` lie in the body.
    """
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    nv = float(np.linalg.norm(v))
    if nv == 0.0:
        return np.inf
    radius = np.inf
    rows = facet_rows(body)
    if rows.b.size:
        slack = rows.b - rows.A @ p
        tilt = np.abs(rows.A @ v) / nv
        mask = (slack > tol) & (tilt > 1e-12)
        if np.any(mask):
            radius = float(np.min(slack[mask]))
    if isinstance(body, Translate):
        radius = min(radius, feature_radius(body.body, p - body.shift, v, tol))
    elif isinstance(body, Intersection):
        for part in body.bodies:
            radius = min(radius, _part_radius(part, p, v, tol))
    elif isinstance(body, Product):
        for part, pi, vi in zip(body.bodies, body.split(p), body.split(v)):
            if np.any(vi):
                radius = min(radius, _part_radius(part, pi, vi, tol))
    return radius


def _part_radius(part, p, v, tol):
    depth = -part.violation(p)
    if depth > tol and part.hform() is None:
        return depth
    return feature_radius(part, p, v, tol)


def _scan_pair(body, x, xp, rng, grid, cfg: ToolConfig):
    """Approach points failing the segment test at every scale, or None."""
    v = xp - x
    p = 0.5 * (x + xp)
    nv = float(np.linalg.norm(v))
    cap = FEATURE_FRACTION * feature_radius(body, p, v, cfg.membership_tol)
    delta = min(FIRST_SCALE * nv, SCALE_RATIO ** (cfg.scales - 1) * cap)
    chosen, scales = [], []
    last = np.inf
    for _ in range(cfg.scales):
        hit = None
        for _ in range(SAMPLES_PER_SCALE):
            q = body.nearest(p + delta * _unit(rng, body.dim))
            d = float(np.linalg.norm(q - p))
            if d >= last or d > delta or body.violation(q) > cfg.membership_tol:
                continue
            if _fails(segment_margins(body, q, v, grid), cfg.witness_margin):
                hit = (q, d)
                break
        if hit is None:
            return None
        chosen.append(hit[0])
        scales.append(delta)
        last = hit[1]
        delta /= SCALE_RATIO
    return chosen, scales


def lnc_search(body: Body, pairs: int | None = None, scales: int | None = None, seed: int | None = None,
               config: ToolConfig = DEFAULT, box=None):
    """Randomized search for a witness of non-LNC; see the module docstring.

    Even-indexed pairs are uniform in the bounding box (rejected to INSIDE);
    odd-indexed pairs are the endpoints of a face exposed by the outward normal
    at the projection of a far-away point. Pairs whose midpoint is interior
    (violation below ``-witness_margin``) are skipped: every point near an
    interior point lies in a small parallel segment.
    """
    cfg = config.override(
        **{k: v for k, v in (("pairs", pairs), ("scales", scales), ("seed", seed)) if v is not None}
    )
    grid = eps_grid(cfg.eps_depth)
    sampler = _Sampler(body, box)
    boundary = degenerate = 0
    for i in range(cfg.pairs):
        rng = np.random.default_rng([cfg.seed, i])
        try:
            pair = sampler.uniform_pair(rng) if i % 2 == 0 else sampler.face_pair(rng)
        except (SolverError, EmptySetError):
            pair = None
        if pair is None:
            degenerate += 1
            continue
        x, xp = (np.asarray(z, dtype=float) for z in pair)
        if np.linalg.norm(xp - x) <= 1e-9 * sampler.diam:
            degenerate += 1
            continue
        p = 0.5 * (x + xp)
        if body.violation(p) < -cfg.witness_margin:
            continue
        boundary += 1
        try:
            found = _scan_pair(body, x, xp, rng, grid, cfg)
        except SolverError:
            continue
        if found is not None:
            approach, deltas = found
            return make_witness(body, x, xp, approach, grid, mu=cfg.witness_margin, tol=cfg.membership_tol,
                                seed=cfg.seed, pair_index=i, scales=deltas)
    return NoWitnessFound(cfg.pairs, boundary, degenerate, cfg.seed)


# -- openness -----------------------------------------------------------------


@dataclass
class OpennessReport:
    base: list
    radius: float
    targets: list
    distances: list
    target_gaps: list
    decades: list
    decade_max: list
    verdict: str
    failing_target: list | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _fiber_points(body, T, y, count, rng):
    """A few extreme points of the fiber over ``y`` (through random linear objectives)."""
    fib = make_fiber(body, T, y)
    pts = []
    if fib.k == 0:
        return [fib.x0]
    for _ in range(count):
        c = _unit(rng, fib.k)
        try:
            res = lexmin(body, [c], x0=fib.x0, N=fib.N, tol=fib.tol, relax=fib.relax_amount())
        except (SolverError, EmptySetError):
            continue
        if not res.clipped:
            pts.append(res.x)
    return pts


def openness_probe(body: Body, T, x_prime, r: float, targets: int = 24, seed: int = 42,
                   config: ToolConfig = DEFAULT, anchors=None) -> OpennessReport:
    """Probe openness of ``T|_Q`` at ``x_prime``.

    Targets near ``T(x')`` are images of points of Q sampled within a decade
    radius of points of the fiber over ``T(x')``; each target's fiber distance
    to ``x'`` comes from the minimal-distance section anchored at ``x'``.
    The verdict is NOT_OPEN_AT when, at each of the three decades, some target
    within the decade radius has fiber distance at least ``r``.

    ``anchors`` replaces the sampled fiber points; each must lie on the fiber
    over ``T(x')``.
    """
    T = T if isinstance(T, LinearMap) else LinearMap(T)
    xp = np.asarray(x_prime, dtype=float)
    if body.violation(xp) > config.membership_tol:
        raise ValueError("base point is OUTSIDE the body")
    if r <= 0:
        raise ValueError("radius must be positive")
    rng = np.random.default_rng([seed, 7])
    y0 = T(xp)
    lo, hi = body.bounding_box()
    span = np.where(np.isfinite(hi - lo), hi - lo, 0.0)
    diam = float(np.linalg.norm(span)) or 1.0
    if anchors is None:
        ends = [xp] + _fiber_points(body, T, y0, 3, rng)
        # limits of non-open sequences can sit anywhere on the fiber, so sample
        # around midpoints of the fiber points as well
        anchors = ends + [0.5 * (a + b) for i, a in enumerate(ends) for b in ends[i + 1:]]
    else:
        anchors = [np.asarray(a, dtype=float) for a in anchors]
        if any(np.linalg.norm(T(a) - y0) > 1e-7 * (1.0 + np.linalg.norm(y0)) for a in anchors):
            raise ValueError("anchors must lie on the fiber over T(x')")
    tnorm = float(np.linalg.norm(T.matrix, 2)) or 1.0
    decades = [1e-1 * diam, 1e-2 * diam, 1e-3 * diam]
    per = max(1, targets // len(decades))
    ys, dists, gaps = [], [], []
    decade_max = []
    failing = None
    for rho in decades:
        best = -np.inf
        for j in range(per):
            w = anchors[j % len(anchors)]
            z = body.nearest(w + (rho / tnorm) * rng.uniform(0.5, 1.0) * _unit(rng, body.dim))
            y = T(z)
            try:
                fib = make_fiber(body, T, y, tol=config.membership_tol, fiber_tol=config.fiber_tol)
                g = min_norm_point(fib, xp).x
            except (EmptyFiberError, SolverError, EmptySetError):
                continue
            d = float(np.linalg.norm(g - xp))
            ys.append(y.tolist())
            dists.append(d)
            gaps.append(float(np.linalg.norm(y - y0)))
            if d > best:
                best = d
                if rho == decades[-1]:
                    failing = y.tolist()
        decade_max.append(best)
    not_open = all(m >= r for m in decade_max)
    return OpennessReport(
        xp.tolist(), r, ys, dists, gaps, decades, decade_max,
        "NOT_OPEN_AT" if not_open else "OPEN_AT", failing if not_open else None,
    )


# -- cross-check ----------------------------------------------------------------


@dataclass
class CrosscheckReport:
    lnc: dict
    probes: list
    image: dict
    consistent: bool
    classification: str
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def lnc_verdict_crosscheck(body: Body, T, config: ToolConfig = DEFAULT, probe_points: int = 3,
                           radius_fraction: float = 0.25, targets: int = 24) -> CrosscheckReport:
    """Run the LNC search, openness probes and the image search, then compare.

    Probes run with the given map at the witness points (when found), an
    interior point and a few boundary points. A witness adds probes with the
    quotient map along its direction, which must fail to be open at one of
    its endpoints.

    Classifications: CLEAN (no witness, all probes open, no image witness),
    FALSIFIED (witness and some NOT_OPEN_AT probe), UNCONFIRMED (witness but
    every probe open) and CONTRADICTION (a clean LNC search together with a
    NOT_OPEN_AT probe or an image witness). Bodies whose exact image is not
    representable get the image verdict UNSUPPORTED_IMAGE.
    """
    T = T if isinstance(T, LinearMap) else LinearMap(T)
    res = lnc_search(body, config=config)
    rng = np.random.default_rng([config.seed, 11])
    lo, hi = body.bounding_box()
    diam = float(np.linalg.norm(hi - lo))
    points = []
    if res.found:
        points += [np.asarray(res.x_prime), np.asarray(res.x)]
    points.append(body.interior_point())
    center = body.interior_point()
    while len(points) < probe_points + (2 if res.found else 0):
        points.append(body.nearest(center + FAR_FACTOR * diam * _unit(rng, body.dim)))
    probes = []
    for k, pt in enumerate(points):
        rep = openness_probe(body, T, pt, radius_fraction * diam, targets=targets, seed=config.seed + k,
                             config=config).to_dict()
        rep["map"] = "given"
        probes.append(rep)
    if res.found:
        # the quotient along v = x' - x is not open at x' or at x; the falsifying
        # sequence approaches the midpoint, so the targets are sampled there
        v = np.asarray(res.v)
        Tv = quotient_map(v)
        for k, pt in enumerate((res.x_prime, res.x)):
            rep = openness_probe(body, Tv, pt, WITNESS_RADIUS * float(np.linalg.norm(v)),
                                 targets=WITNESS_TARGETS, seed=config.seed + k, config=config,
                                 anchors=[res.midpoint]).to_dict()
            rep["map"] = "witness-quotient"
            probes.append(rep)
    try:
        image = AffineImage(T.matrix, body)
        img = lnc_search(image, config=config)
        image_report = img.to_dict()
    except UnsupportedImage as exc:
        image_report = {"verdict": "UNSUPPORTED_IMAGE", "reason": str(exc)}
    notes = []
    any_not_open = any(p["verdict"] == "NOT_OPEN_AT" for p in probes)
    if not res.found and any_not_open:
        notes.append("LNC search clean but a probe is NOT_OPEN_AT")
    if not res.found and image_report["verdict"] == "NOT_LNC_WITNESS":
        notes.append("LNC search clean but the image has a witness")
    if res.found and not any_not_open:
        notes.append("witness found but no probe confirmed a non-open restriction")
    consistent = not notes
    if res.found and any_not_open:
        cls = "FALSIFIED"
    elif res.found:
        cls = "UNCONFIRMED"
    elif notes:
        cls = "CONTRADICTION"
    else:
        cls = "CLEAN"
    return CrosscheckReport(res.to_dict(), probes, image_report, consistent, cls, notes)
