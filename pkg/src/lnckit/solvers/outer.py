"""Cutting-plane solvers over oracle bodies.

All routines work on an affine slice ``x = x0 + N s`` of a body (``N`` with
orthonormal columns; the identity for ambient problems). The body's exact
linear constraints, a coordinate box in ``s`` and accumulated cuts form a
polyhedral outer approximation, refined until the LP or projection answer is
INSIDE at the requested tolerance.

Cuts come from ``Body.linearize``. When a strictly interior point is known the
cut is taken at the boundary crossing on the segment towards the infeasible
point, which gives supporting hyperplanes and fast convergence; otherwise the
cut is taken at the infeasible point itself.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qp import InfeasibleError, project_polyhedron
from .simplex import LPStatus, SolverError, lp_minimize

CAP = 1e3


class EmptySetError(ValueError):
    """The outer approximation (hence the body slice) is empty."""


@dataclass
class OuterResult:
    x: np.ndarray
    s: np.ndarray
    values: list
    clipped: bool
    iterations: int


@dataclass
class FeasibilityResult:
    x: np.ndarray
    s: np.ndarray
    value: float
    lower: float
    iterations: int

    def feasible(self, tol: float) -> bool:
        return self.value <= tol


class Slice:
    """Outer model of ``{s : x0 + N s in Q, C s = d}`` inside an s-box."""

    def __init__(self, body, x0=None, N=None, eq=None, cap: float = CAP, tol: float = 1e-9,
                 relax: float = 0.0):
        n = body.dim
        if x0 is None:
            x0 = _default_origin(body)
        self.body = body
        self.x0 = np.asarray(x0, dtype=float).ravel()
        self.N = np.eye(n) if N is None else np.asarray(N, dtype=float).reshape(n, -1)
        self.k = self.N.shape[1]
        self.tol = tol
        # cuts keep points with violation up to tol/2, so LP answers can reach tol
        self.slack = 0.5 * tol
        self.cap = cap
        lin = body.linear_constraints()
        A = lin.A @ self.N
        b = lin.b - lin.A @ self.x0 + relax
        keep = np.linalg.norm(A, axis=1) > 1e-13
        if np.any(b[~keep] < -1e-9):
            raise EmptySetError("linear constraints exclude the slice")
        self.A, self.b = A[keep], b[keep]
        E = lin.E @ self.N
        f = lin.f - lin.E @ self.x0
        if eq is not None:
            C, d = eq
            E = np.vstack([E, np.asarray(C, dtype=float).reshape(-1, self.k)])
            f = np.concatenate([f, np.asarray(d, dtype=float).ravel()])
        keep = np.linalg.norm(E, axis=1) > 1e-13
        if np.any(np.abs(f[~keep]) > 1e-9):
            raise EmptySetError("equality constraints exclude the slice")
        self.E, self.f = E[keep], f[keep]
        self.cut_A: list[np.ndarray] = []
        self.cut_b: list[float] = []
        self.lo = np.full(self.k, -cap)
        self.hi = np.full(self.k, cap)
        self._tighten_box()
        self.interior = None

    # -- model ---------------------------------------------------------------
    def point(self, s) -> np.ndarray:
        return self.x0 + self.N @ s

    def violation(self, s) -> float:
        return float(self.body.violation(self.point(s)))

    def _box_rows(self):
        eye = np.eye(self.k)
        return np.vstack([eye, -eye]), np.concatenate([self.hi, -self.lo])

    def inequalities(self):
        Ab, bb = self._box_rows()
        parts_A = [self.A, Ab]
        parts_b = [self.b, bb]
        if self.cut_A:
            parts_A.append(np.array(self.cut_A))
            parts_b.append(np.array(self.cut_b))
        return np.vstack(parts_A), np.concatenate(parts_b)

    def _tighten_box(self):
        # the body's own linear constraints often bound the slice already
        for i in range(self.k):
            for sign in (1.0, -1.0):
                c = np.zeros(self.k)
                c[i] = -sign
                res = self.lp(c)
                if res.status is LPStatus.INFEASIBLE:
                    raise EmptySetError("linear constraints are infeasible on the slice")
                if res.optimal:
                    val = -res.value * sign
                    if sign > 0:
                        self.hi[i] = min(self.hi[i], val + 1e-9 * (1 + abs(val)))
                    else:
                        self.lo[i] = max(self.lo[i], val - 1e-9 * (1 + abs(val)))

    def clipped(self, s) -> bool:
        at_cap = (np.abs(s - self.cap) <= 1e-9 * self.cap) | (np.abs(s + self.cap) <= 1e-9 * self.cap)
        return bool(np.any(at_cap))

    def lp(self, c, bands=None):
        """Minimize ``c @ s`` over the model; ``bands`` are ``(row, lo, hi)`` slabs."""
        A, b = self.inequalities()
        if bands:
            A = np.vstack([A] + [np.vstack([r, -r]) for r, _, _ in bands])
            b = np.concatenate([b] + [np.array([hi, -lo]) for _, lo, hi in bands])
        E, f = self.E, self.f
        return lp_minimize(c, A, b, E if f.size else None, f if f.size else None)

    # -- cuts ------------------------------------------------------------------
    def add_cut(self, s_out, v_out=None) -> None:
        """Add a linear constraint excluding ``s_out`` (which must be OUTSIDE)."""
        if v_out is None:
            v_out = self.violation(s_out)
        if self.interior is not None:
            sb = self._crossing(self.interior, s_out)
            val, g = self.body.linearize(self.point(sb))
            gs = self.N.T @ g
            if val + gs @ (s_out - sb) > self.slack and np.linalg.norm(gs) > 0:
                self._push(gs, self.slack - val + gs @ sb)
                return
        val, g = self.body.linearize(self.point(s_out))
        gs = self.N.T @ g
        if np.linalg.norm(gs) == 0.0:
            raise SolverError("cannot separate point: vanishing subgradient")
        self._push(gs, self.slack - val + gs @ s_out)

    def _push(self, a, beta):
        nrm = float(np.linalg.norm(a))
        self.cut_A.append(a / nrm)
        self.cut_b.append(beta / nrm)

    def _crossing(self, s_in, s_out, iters: int = 60, inside: bool = False):
        lo, hi = 0.0, 1.0
        d = s_out - s_in
        for _ in range(iters):
            m = 0.5 * (lo + hi)
            if self.violation(s_in + m * d) <= 0.0:
                lo = m
            else:
                hi = m
        return s_in + (lo if inside else hi) * d

    def set_interior(self, s) -> None:
        s = np.asarray(s, dtype=float)
        self.interior = s if self.violation(s) < 0.0 else None


def _default_origin(body) -> np.ndarray:
    try:
        return np.asarray(body.interior_point(), dtype=float)
    except (NotImplementedError, ValueError):
        return np.zeros(body.dim)


def _seed_interior(model: Slice, budget: int = 40) -> None:
    if model.violation(np.zeros(model.k)) < 0.0:
        model.set_interior(np.zeros(model.k))
        return
    res = _min_violation(model, target=-1e-6, max_iter=budget)
    if res.value < 0.0:
        model.set_interior(res.s)


def _min_violation(model: Slice, target=None, stop_above=None, gap_tol=1e-9, max_iter=10000):
    """Kelley's method on ``min violation`` with an LP lower bound."""
    k = model.k
    A, b = model.inequalities()
    # variables (s, tau); keep cuts local to this run
    rows_A = [np.hstack([A, np.zeros((A.shape[0], 1))])]
    rows_b = [b]
    E = np.hstack([model.E, np.zeros((model.E.shape[0], 1))])
    f = model.f
    c = np.zeros(k + 1)
    c[-1] = 1.0
    floor = -max(1.0, float(np.max(model.hi - model.lo)))
    rows_A.append(np.concatenate([np.zeros(k), [-1.0]])[None, :])
    rows_b.append(np.array([-floor]))
    s = np.zeros(k)
    # start from the slice origin clipped into the box
    s = np.clip(s, model.lo, model.hi)
    best_s, best_v = s, model.violation(s)
    lower = -np.inf
    for it in range(1, max_iter + 1):
        val, g = model.body.linearize(model.point(s))
        gs = model.N.T @ g
        rows_A.append(np.concatenate([gs, [-1.0]])[None, :])
        rows_b.append(np.array([gs @ s - val]))
        if target is not None and best_v <= target:
            break
        if stop_above is not None and lower > stop_above:
            break
        if best_v - lower <= gap_tol:
            break
        res = lp_minimize(c, np.vstack(rows_A), np.concatenate(rows_b), E if f.size else None, f if f.size else None)
        if res.status is LPStatus.INFEASIBLE:
            return FeasibilityResult(model.point(best_s), best_s, best_v, np.inf, it)
        if not res.optimal:
            raise SolverError("min-violation LP is unbounded")
        lower = max(lower, res.value)
        s = res.x[:k]
        v = model.violation(s)
        if v < best_v:
            best_s, best_v = s, v
    return FeasibilityResult(model.point(best_s), best_s, best_v, lower, it)


def min_violation(body, x0=None, N=None, eq=None, target=None, stop_above=None, gap_tol=1e-9,
                  max_iter=10000, cap: float = CAP, relax: float = 0.0) -> FeasibilityResult:
    """Minimize the violation over a slice; ``lower`` certifies emptiness when positive."""
    if x0 is None:
        x0 = _box_origin(body)
    model = Slice(body, x0, N, eq, cap=cap, relax=relax)
    return _min_violation(model, target, stop_above, gap_tol, max_iter)


def _box_origin(body) -> np.ndarray:
    """Centre of the finite part of the box spanned by the body's linear constraints."""
    try:
        tmp = Slice(_LinearOnly(body.linear_constraints(), body.dim), np.zeros(body.dim))
    except EmptySetError:
        return np.zeros(body.dim)
    lo = np.where(tmp.lo > -CAP, tmp.lo, 0.0)
    hi = np.where(tmp.hi < CAP, tmp.hi, lo)
    return 0.5 * (lo + hi)


class _LinearOnly:
    def __init__(self, lin, dim):
        self._lin = lin
        self.dim = dim

    def linear_constraints(self):
        return self._lin

    def violation(self, x):
        return self._lin.violation(x)


def lexmin(body, objectives, x0=None, N=None, eq=None, tol: float = 1e-9, max_iter: int = 2000,
           cap: float = CAP, relax: float = 0.0, model: Slice | None = None) -> OuterResult:
    """Lexicographic minimum of linear objectives (in s-coordinates) over a slice."""
    if model is None:
        model = Slice(body, x0, N, eq, cap=cap, tol=tol, relax=relax)
        _seed_interior(model)
    bands = []
    values = []
    total = 0
    res = None
    for c in objectives:
        c = np.asarray(c, dtype=float).ravel()
        widen = 1.0
        for _ in range(max_iter):
            total += 1
            res = model.lp(c, bands)
            if res.status is LPStatus.INFEASIBLE:
                # earlier slabs can lose their last near-feasible point to new
                # cuts; widen them up to the slice tolerance before giving up
                if not bands or widen >= 100.0:
                    raise EmptySetError("slice is empty")
                widen *= 10.0
                bands = [(r, lo, lo + (hi - lo) * 10.0) for r, lo, hi in bands]
                continue
            if not res.optimal:
                raise SolverError("outer LP unbounded despite box")
            v = model.violation(res.x)
            if v <= tol:
                break
            model.add_cut(res.x, v)
        else:
            raise SolverError(f"cutting-plane loop did not converge in {max_iter} iterations")
        values.append(res.value)
        bands.append((c, res.value, res.value + tol * (1.0 + abs(res.value))))
    s = res.x
    return OuterResult(model.point(s), s, values, model.clipped(s), total)


def project(body, p, x0=None, N=None, eq=None, tol: float = 1e-9, max_iter: int = 10000,
            cap: float = CAP, relax: float = 0.0) -> OuterResult:
    """Nearest point of the slice to ``p`` (ambient), by cutting planes."""
    model = Slice(body, x0, N, eq, cap=cap, tol=tol, relax=relax)
    _seed_interior(model)
    p = np.asarray(p, dtype=float)
    target = model.N.T @ (p - model.x0)
    prev = None
    for it in range(1, max_iter + 1):
        A, b = model.inequalities()
        try:
            sol = project_polyhedron(target, A, b, model.E if model.f.size else None,
                                     model.f if model.f.size else None)
        except InfeasibleError as exc:
            raise EmptySetError("slice is empty") from exc
        s = sol.x
        v = model.violation(s)
        if v > tol and prev is not None and model.interior is not None and np.array_equal(s, prev):
            # the last cut is violated by less than the QP tolerance: step back
            # to the boundary from the interior instead of cutting forever
            s = model._crossing(model.interior, s, inside=True)
            v = model.violation(s)
        if v <= tol:
            x = model.point(s)
            return OuterResult(x, s, [float(np.linalg.norm(x - p))], model.clipped(s), it)
        model.add_cut(s, v)
        prev = s
    raise SolverError(f"cutting-plane projection did not converge in {max_iter} iterations")


def generic_support(body, d):
    d = np.asarray(d, dtype=float)
    res = lexmin(body, [-d])
    if res.clipped:
        return np.inf, None
    return float(d @ res.x), res.x


def generic_lexmax(body, directions) -> np.ndarray:
    return lexmin(body, [-np.asarray(d, dtype=float) for d in directions]).x


def generic_nearest(body, p) -> np.ndarray:
    return project(body, p).x
