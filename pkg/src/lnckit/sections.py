"""Continuous sections of restricted linear maps and a continuity probe.

Three constructions are provided:

* ``section_gv``: the fiber endpoint along a direction ``v`` (LOWEST), or the
  fiber point with coefficient of minimal absolute value (MIN_ABS);
* ``section_min_norm``: the fiber point nearest an anchor (origin by default);
* ``section_gamma``: the lexicographic slice selector driven by a separating
  family of linear functionals.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .bodies.extent import line_extent
from .linalg import LinearMap, as_vector, quotient_map
from .solvers.fiber import EmptyFiberError, Fiber, make_fiber, min_norm_point
from .solvers.outer import CAP, lexmin

SLICE_TOL = 1e-7


class GvMode(str, enum.Enum):
    LOWEST = "LOWEST"
    MIN_ABS = "MIN_ABS"


class NonSeparatingError(ValueError):
    code = "NON_SEPARATING"


class UnboundedBelowError(ValueError):
    code = "UNBOUNDED_BELOW"


@dataclass(frozen=True)
class SectionValue:
    x: np.ndarray
    clipped: bool = False


class FunctionalFamily:
    """Ordered linear functionals (ambient coefficient vectors) separating ker T.

    The family separates the kernel when the matrix of the functionals applied
    to the kernel basis has full column rank.
    """

    def __init__(self, functionals, kernel: np.ndarray):
        F = np.atleast_2d(np.asarray(functionals, dtype=float))
        kernel = np.asarray(kernel, dtype=float)
        if kernel.shape[1] and F.shape[1] != kernel.shape[0]:
            raise ValueError("functionals must live in the ambient space of the kernel")
        self.F = F
        self.kernel = kernel
        restricted = F @ kernel
        rank = np.linalg.matrix_rank(restricted, tol=1e-10) if restricted.size else 0
        self.separating = rank == kernel.shape[1]
        if not self.separating:
            raise NonSeparatingError("functional family does not separate the kernel")

    @classmethod
    def default(cls, T: LinearMap) -> "FunctionalFamily":
        """Coordinate functionals of the kernel basis, in basis order."""
        return cls(T.kernel.T if T.kernel.shape[1] else np.zeros((0, T.cols)), T.kernel)

    def restricted(self) -> np.ndarray:
        return self.F @ self.kernel


def _as_map(T) -> LinearMap:
    return T if isinstance(T, LinearMap) else LinearMap(T)


# -- g_v ----------------------------------------------------------------------


def gv_point(body, T, y, mode=GvMode.LOWEST, cap: float = CAP, fiber: Fiber | None = None) -> SectionValue:
    """g_v for a map whose kernel is the line spanned by its first kernel vector ``v``."""
    T = _as_map(T)
    mode = GvMode(mode)
    if T.kernel.shape[1] != 1:
        raise ValueError("g_v needs a map with one-dimensional kernel")
    v = T.kernel[:, 0]
    fib = fiber or make_fiber(body, T, y)
    ext = line_extent(body, fib.x0, v, cap=cap, tol=fib.tol)
    if mode is GvMode.LOWEST:
        if ext.clipped_lo:
            raise UnboundedBelowError("fiber is unbounded below along v")
        return SectionValue(fib.x0 + ext.lo * v)
    # coefficients relative to the base point of the fiber line in v-perp
    base = fib.x0 - (fib.x0 @ v) * v
    off = float(fib.x0 @ v)
    lo, hi = ext.lo + off, ext.hi + off
    if lo <= 0.0 <= hi:
        b = 0.0
    elif abs(hi) < abs(lo):
        b = hi
    elif abs(lo) < abs(hi):
        b = lo
    else:
        b = max(lo, hi)
    clipped = (b == lo and ext.clipped_lo) or (b == hi and ext.clipped_hi)
    return SectionValue(base + b * v, bool(clipped))


def section_gv(body, v, y, mode=GvMode.LOWEST, cap: float = CAP) -> np.ndarray:
    """Fiber endpoint along ``v`` of the orthogonal projection along ``v``.

    ``y`` is given in the canonical basis of v-perp (for a coordinate
    direction this is the projection dropping that coordinate).
    """
    v = as_vector(v, dim=body.dim, name="direction")
    if not np.any(v):
        raise ValueError("direction must be nonzero")
    Tv = quotient_map(v)
    # quotient kernels are canonical up to sign; orient along v
    T = _OrientedLine(Tv, v / np.linalg.norm(v))
    return gv_point(body, T, y, mode, cap).x


class _OrientedLine(LinearMap):
    """A LinearMap whose one-dimensional kernel basis is a chosen unit vector."""

    def __init__(self, base: LinearMap, u: np.ndarray):
        super().__init__(base.matrix)
        self.kernel = u[:, None].copy()


# -- minimal norm -------------------------------------------------------------


def min_norm_value(body, T, y, anchor=None, cap: float = CAP, fiber: Fiber | None = None) -> SectionValue:
    T = _as_map(T)
    fib = fiber or make_fiber(body, T, y)
    pt = min_norm_point(fib, anchor, cap=cap)
    return SectionValue(pt.x, pt.clipped)


def section_min_norm(body, T, y, anchor=None) -> np.ndarray:
    """Fiber point of minimal distance to ``anchor`` (minimal norm for the default 0)."""
    return min_norm_value(body, T, y, anchor).x


def embed_target(T, y) -> np.ndarray:
    """Minimal-norm preimage of ``y``; used as the anchor of the min-dist variant."""
    return _as_map(T).particular_solution(y)


# -- Gamma --------------------------------------------------------------------


def gamma_value(body, T, y, family: FunctionalFamily | None = None, cap: float = CAP,
                fiber: Fiber | None = None) -> SectionValue:
    T = _as_map(T)
    family = family or FunctionalFamily.default(T)
    fib = fiber or make_fiber(body, T, y)
    k = fib.k
    if k == 0:
        return SectionValue(fib.x0.copy())
    C = family.F @ fib.N
    # functionals that strictly increase the rank of the slice system
    chosen: list[int] = []
    for r in range(C.shape[0]):
        trial = C[chosen + [r]]
        if np.linalg.matrix_rank(trial, tol=1e-10) > len(chosen):
            chosen.append(r)
        if len(chosen) == k:
            break
    head, last = chosen[:-1], chosen[-1]
    clipped = False
    if head:
        res = lexmin(body, [C[r] for r in head], x0=fib.x0, N=fib.N, tol=fib.tol, cap=cap,
                     relax=fib.relax_amount())
        s = res.s
        clipped = res.clipped
    else:
        s = np.zeros(k)
    # one free direction left: the null direction of the slice rows
    if head:
        _, _, vt = np.linalg.svd(C[head], full_matrices=True)
        u_s = vt[-1]
    else:
        u_s = np.ones(1)
    u = fib.N @ u_s
    u /= np.linalg.norm(u)
    base = fib.point(s)
    ext = line_extent(body, base, u, cap=cap, tol=fib.tol)
    slope = float(family.F[last] @ u)
    if slope > 0:
        b, edge = ext.lo, ext.clipped_lo
    else:
        b, edge = ext.hi, ext.clipped_hi
    return SectionValue(base + b * u, bool(clipped or edge))


def section_gamma(body, T, y, family: FunctionalFamily | None = None) -> np.ndarray:
    """Lexicographic slice selector over the fiber of ``y``."""
    return gamma_value(body, T, y, family).x


def lex_precedes(a, b, tol: float = 1e-6) -> bool:
    """True when ``a`` precedes or ties ``b`` lexicographically with per-entry tolerance."""
    for ai, bi in zip(a, b):
        if ai < bi - tol:
            return True
        if ai > bi + tol:
            return False
    return True


# -- configured sections and probes ------------------------------------------

METHODS = ("gv-lowest", "gv-minabs", "min-norm", "min-dist", "gamma")


@dataclass
class Section:
    """A section construction bound to a body and map, callable on targets."""

    body: object
    T: LinearMap
    method: str
    family: FunctionalFamily | None = None
    anchor: np.ndarray | None = None
    cap: float = CAP

    def __post_init__(self):
        self.T = _as_map(self.T)
        if self.method not in METHODS:
            raise ValueError(f"unknown section method {self.method!r}; expected one of {METHODS}")

    def value(self, y) -> SectionValue:
        m = self.method
        if m == "gv-lowest":
            return gv_point(self.body, self.T, y, GvMode.LOWEST, self.cap)
        if m == "gv-minabs":
            return gv_point(self.body, self.T, y, GvMode.MIN_ABS, self.cap)
        if m == "min-norm":
            return min_norm_value(self.body, self.T, y, self.anchor, self.cap)
        if m == "min-dist":
            return min_norm_value(self.body, self.T, y, embed_target(self.T, y), self.cap)
        return gamma_value(self.body, self.T, y, self.family, self.cap)

    def __call__(self, y) -> np.ndarray:
        return self.value(y).x


class ProbeError(EmptyFiberError):
    def __init__(self, index: int, message: str):
        super().__init__(f"path point {index}: {message}")
        self.index = index


@dataclass
class SectionProbe:
    path: list
    values: list
    jumps: list
    max_jump: float
    argmax: int
    clipped: list = field(default_factory=list)
    refinement: list = field(default_factory=list)


def _evaluate(section, y, index):
    try:
        if isinstance(section, Section):
            return section.value(y)
        return SectionValue(np.asarray(section(y), dtype=float))
    except EmptyFiberError as exc:
        raise ProbeError(index, str(exc)) from exc


def probe_continuity(section, path, refine: int = 0) -> SectionProbe:
    """Evaluate ``section`` along ``path`` and record step jumps.

    With ``refine > 0`` the largest-jump interval is bisected in target space
    ``refine`` times, each time following the larger half; the trail of
    ``(y_a, y_b, jump)`` triples is stored in ``refinement``.
    """
    path = [np.atleast_1d(np.asarray(y, dtype=float)) for y in path]
    if len(path) < 2:
        raise ValueError("path needs at least two points")
    vals = [_evaluate(section, y, i) for i, y in enumerate(path)]
    xs = [v.x for v in vals]
    jumps = [float(np.linalg.norm(xs[i + 1] - xs[i])) for i in range(len(xs) - 1)]
    j = int(np.argmax(jumps))
    probe = SectionProbe(path, xs, jumps, jumps[j], j, [v.clipped for v in vals])
    ya, yb, xa, xb = path[j], path[j + 1], xs[j], xs[j + 1]
    for _ in range(refine):
        ym = 0.5 * (ya + yb)
        xm = _evaluate(section, ym, j).x
        left, right = float(np.linalg.norm(xm - xa)), float(np.linalg.norm(xb - xm))
        if left >= right:
            yb, xb = ym, xm
            probe.refinement.append((ya.copy(), yb.copy(), left))
        else:
            ya, xa = ym, xm
            probe.refinement.append((ya.copy(), yb.copy(), right))
    return probe
