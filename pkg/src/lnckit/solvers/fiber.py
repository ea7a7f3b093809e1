"""Fibers ``T^{-1}(y) ∩ Q`` in kernel coordinates and optimization over them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from ..bodies.extent import line_extent
from ..linalg import LinearMap, as_vector
from .outer import CAP, EmptySetError, min_violation, project
from .qp import InfeasibleError, project_polyhedron
from .simplex import LPStatus, lp_minimize

# Kelley iterations before settling for a point inside the tolerance band
SHORT_RUN = 150


class EmptyFiberError(ValueError):
    """The target is not in T(Q) at the fiber feasibility tolerance."""

    code = "EMPTY_FIBER"


@dataclass(frozen=True)
class Fiber:
    """``{x0 + N s} ∩ Q`` with ``T x0 = y`` and ``x0`` INSIDE.

    ``tol`` is the membership tolerance the fiber was certified at: the body
    tolerance normally, the looser fiber tolerance when only that succeeded
    (``relaxed``).
    """

    body: object
    T: LinearMap
    y: np.ndarray
    x0: np.ndarray
    N: np.ndarray
    tol: float = 1e-9
    relaxed: bool = False

    @property
    def k(self) -> int:
        return self.N.shape[1]

    def point(self, s) -> np.ndarray:
        return self.x0 + self.N @ np.asarray(s, dtype=float)

    def contains(self, x, tol: float | None = None) -> bool:
        tol = self.tol if tol is None else tol
        x = np.asarray(x, dtype=float)
        if np.linalg.norm(self.T(x) - self.y) > 1e-7 * (1.0 + np.linalg.norm(self.y)):
            return False
        return self.body.violation(x) <= tol

    def relax_amount(self) -> float:
        """Slack added to polyhedral constraints so that ``x0`` stays feasible."""
        return 1e-7 if self.relaxed else 0.0


def _polyhedral_point(h, xp, N, slack):
    A = h.A @ N
    b = h.b - h.A @ xp + slack
    E = h.E @ N if h.f.size else None
    f = h.f - h.E @ xp if h.f.size else None
    res = lp_minimize(np.zeros(N.shape[1]), A, b, E, f)
    if res.status is LPStatus.INFEASIBLE:
        return None
    return xp + N @ res.x


def make_fiber(body, T, y, tol: float = 1e-9, fiber_tol: float = 1e-7, cap: float = CAP) -> Fiber:
    """Build the fiber of ``T|_Q`` over ``y``; raise EmptyFiberError if ``y`` is not in T(Q)."""
    T = T if isinstance(T, LinearMap) else LinearMap(T)
    y = as_vector(y, dim=T.rows, name="target")
    if T.cols != body.dim:
        raise ValueError("map and body dimensions differ")
    xp = T.particular_solution(y)
    if np.linalg.norm(T(xp) - y) > 1e-9 * (1.0 + np.linalg.norm(y)):
        raise EmptyFiberError("target is not in the range of the map")
    N = T.kernel
    k = N.shape[1]

    def build(x, level):
        return Fiber(body, T, y, x, N, tol=level, relaxed=level > tol)

    if k == 0:
        v = body.violation(xp)
        for level in (tol, fiber_tol):
            if v <= level:
                return build(xp, level)
        raise EmptyFiberError(f"target is not in T(Q): violation {v:.3e}")

    h = body.hform()
    if h is not None:
        # LP phase 1 with a hair of slack so boundary targets resolve as feasible
        for level in (tol, fiber_tol):
            x = _polyhedral_point(h, xp, N, 0.5 * level)
            if x is not None and body.violation(x) <= level:
                return build(x, level)
        raise EmptyFiberError("fiber LP is infeasible")

    if k == 1:
        u = N[:, 0]
        lin = body.linear_constraints()
        lo, hi = -cap, cap
        if lin.b.size:
            au = lin.A @ u
            slack = lin.b - lin.A @ xp
            pos, neg = au > 1e-15, au < -1e-15
            if np.any(pos):
                hi = min(hi, float(np.min(slack[pos] / au[pos])))
            if np.any(neg):
                lo = max(lo, float(np.max(slack[neg] / au[neg])))
        if lo > hi:
            lo = hi = 0.5 * (lo + hi)
        res = minimize_scalar(
            lambda s: body.violation(xp + s * u), bounds=(lo, hi), method="bounded",
            options={"xatol": 1e-13, "maxiter": 2000},
        )
        cands = [float(res.x), lo, hi]
        vals = [body.violation(xp + s * u) for s in cands]
        i = int(np.argmin(vals))
        s, v = cands[i], vals[i]
        for level in (tol, fiber_tol):
            if v <= level:
                return build(xp + s * u, level)
        raise EmptyFiberError(f"target is not in T(Q): minimal violation {v:.3e}")

    # a short run first: thin fibers never reach the interior target, and a
    # point inside the tolerance band is all we need
    try:
        res = min_violation(body, x0=xp, N=N, target=-1e-6, stop_above=fiber_tol, gap_tol=1e-10,
                            max_iter=SHORT_RUN, cap=cap)
        if res.value > tol and res.lower <= fiber_tol:
            res = min_violation(body, x0=xp, N=N, target=-1e-6, stop_above=fiber_tol, gap_tol=1e-10,
                                max_iter=2000, cap=cap)
    except EmptySetError as exc:
        raise EmptyFiberError(str(exc)) from exc
    for level in (tol, fiber_tol):
        if res.value <= level:
            return build(res.x, level)
    raise EmptyFiberError(
        f"target is not in T(Q): violation {res.value:.3e}, certified lower bound {res.lower:.3e}"
    )


@dataclass(frozen=True)
class FiberPoint:
    x: np.ndarray
    clipped: bool = False


def min_norm_point(fiber: Fiber, anchor=None, cap: float = CAP) -> FiberPoint:
    """Nearest fiber point to ``anchor`` (default the origin), with a clip flag."""
    body = fiber.body
    n = body.dim
    a = np.zeros(n) if anchor is None else as_vector(anchor, dim=n, name="anchor")
    if fiber.k == 0:
        return FiberPoint(fiber.x0.copy())
    N = fiber.N
    if fiber.k == 1:
        u = N[:, 0]
        ext = line_extent(body, fiber.x0, u, cap=cap, tol=fiber.tol)
        s = float(u @ (a - fiber.x0))
        s_c = min(max(s, ext.lo), ext.hi)
        clipped = (s_c == ext.lo and ext.clipped_lo) or (s_c == ext.hi and ext.clipped_hi)
        return FiberPoint(fiber.x0 + s_c * u, bool(clipped))
    h = body.hform()
    if h is not None:
        slack = 0.5 * fiber.tol
        A = h.A @ N
        b = h.b - h.A @ fiber.x0 + slack
        E = h.E @ N if h.f.size else None
        f = h.f - h.E @ fiber.x0 if h.f.size else None
        try:
            sol = project_polyhedron(N.T @ (a - fiber.x0), A, b, E, f)
        except InfeasibleError as exc:
            raise EmptyFiberError(str(exc)) from exc
        return FiberPoint(fiber.x0 + N @ sol.x)
    res = project(body, a, x0=fiber.x0, N=N, tol=fiber.tol, cap=cap)
    return FiberPoint(res.x, res.clipped)


def min_norm_over_fiber(fiber: Fiber, anchor=None) -> np.ndarray:
    """Point of the fiber nearest to ``anchor`` (the minimal-norm point for anchor 0)."""
    return min_norm_point(fiber, anchor).x
