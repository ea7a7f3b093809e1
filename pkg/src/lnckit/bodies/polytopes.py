"""Polytopal bodies: H-polytopes, V-polytopes and zonotopes."""

from __future__ import annotations

import itertools
import math
from functools import cached_property

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from ..solvers.qp import project_polyhedron
from ..solvers.simplex import LPStatus, lp_minimize
from .base import Body, HForm

# qhull is cheap for desk-scale point counts up to this affine dimension
MAX_HULL_DIM = 6
MAX_ZONOTOPE_FACETS = 20000
FACE_TOL = 1e-9


class PolyhedralBody(Body):
    """Shared oracles for bodies with an exact H-form."""

    def _hform(self) -> HForm | None:
        raise NotImplementedError

    @cached_property
    def _h(self) -> HForm | None:
        return self._hform()

    def hform(self) -> HForm | None:
        return self._h

    def linear_constraints(self) -> HForm:
        h = self._h
        return h if h is not None else super().linear_constraints()

    def violation(self, x) -> float:
        return self._h.violation(np.asarray(x, dtype=float))

    def violations(self, X) -> np.ndarray:
        return self._h.violations(np.atleast_2d(np.asarray(X, dtype=float)))

    def linearize(self, x):
        h = self._h
        x = np.asarray(x, dtype=float)
        best, grad = -np.inf, np.zeros(self.dim)
        if h.b.size:
            s = h.A @ x - h.b
            i = int(np.argmax(s))
            best, grad = float(s[i]), h.A[i].copy()
        if h.f.size:
            r = h.E @ x - h.f
            j = int(np.argmax(np.abs(r)))
            if abs(r[j]) > best:
                sign = 1.0 if r[j] >= 0 else -1.0
                best, grad = float(abs(r[j])), sign * h.E[j]
        return best, grad

    def nearest(self, p) -> np.ndarray:
        p = self._check(p, "point")
        h = self._h
        if h.violation(p) <= 0.0:
            return p.copy()
        return project_polyhedron(p, h.A, h.b, h.E, h.f).x

    def _lp_max(self, d, extra_A=None, extra_b=None):
        h = self._h
        A, b = h.A, h.b
        if extra_A is not None:
            A = np.vstack([A, extra_A])
            b = np.concatenate([b, extra_b])
        return lp_minimize(-d, A, b, h.E if h.f.size else None, h.f if h.f.size else None)

    def support(self, d):
        d = self._check(d, "direction")
        res = self._lp_max(d)
        if res.status is LPStatus.UNBOUNDED:
            return math.inf, None
        return -res.value, res.x

    def support_face(self, n, w, tol: float = FACE_TOL) -> np.ndarray:
        n = self._check(n, "normal")
        w = self._check(w, "direction")
        first = self._lp_max(n)
        if not first.optimal:
            raise ValueError("support is unbounded in the given normal")
        a = -first.value
        second = self._lp_max(w, -n[None, :], np.array([-(a - tol * (1.0 + abs(a)))]))
        return second.x if second.optimal else first.x


class HPolytope(PolyhedralBody):
    """``{x : A x <= b}``; nonemptiness is certified at construction."""

    kind = "hpolytope"

    def __init__(self, A, b):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.asarray(b, dtype=float).ravel()
        if A.shape[0] != b.size:
            raise ValueError("A and b have inconsistent sizes")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("non-finite constraint data")
        self.A = A.copy()
        self.b = b.copy()
        self.A.setflags(write=False)
        self.b.setflags(write=False)
        self.dim = A.shape[1]
        self._center = self._chebyshev_center()

    def _hform(self):
        return HForm.build(self.A, self.b, dim=self.dim)

    def _chebyshev_center(self) -> np.ndarray:
        h = self._h
        m, n = h.A.shape
        c = np.zeros(n + 1)
        c[-1] = -1.0
        A = np.hstack([h.A, np.ones((m, 1))])
        cap = np.zeros((1, n + 1))
        cap[0, -1] = 1.0
        res = lp_minimize(c, np.vstack([A, cap]), np.concatenate([h.b, [1e3]]))
        if not res.optimal or res.x[-1] < -1e-9:
            raise ValueError("H-polytope is empty")
        return res.x[:n]

    @property
    def feasible_point(self) -> np.ndarray:
        return self._center.copy()

    def interior_point(self) -> np.ndarray:
        return self._center.copy()

    def to_dict(self) -> dict:
        return {"kind": self.kind, "A": self.A.tolist(), "b": self.b.tolist()}


def _affine_frame(points: np.ndarray, tol: float = 1e-10):
    """Centroid, basis of the affine hull directions and of their complement."""
    c = points.mean(axis=0)
    D = points - c
    n = points.shape[1]
    if not np.any(D):
        return c, np.zeros((n, 0)), np.eye(n)
    _, s, vt = np.linalg.svd(D, full_matrices=True)
    scale = max(1.0, float(np.abs(points).max()))
    r = int(np.sum(s > tol * scale * max(points.shape)))
    return c, vt[:r].T, vt[r:].T


def _dedupe(A: np.ndarray, b: np.ndarray):
    keys = {}
    for row, val in zip(A, b):
        key = tuple(np.round(np.append(row, val), 10))
        keys.setdefault(key, (row, val))
    rows = list(keys.values())
    return np.array([r for r, _ in rows]), np.array([v for _, v in rows])


def _hull_hform(points: np.ndarray) -> HForm | None:
    """H-form of conv(points) via an affine-hull reduction and qhull."""
    n = points.shape[1]
    c, U, W = _affine_frame(points)
    r = U.shape[1]
    if r > MAX_HULL_DIM:
        return None
    Y = (points - c) @ U
    if r == 0:
        A_y, b_y = np.zeros((0, 0)), np.zeros(0)
    elif r == 1:
        y = Y[:, 0]
        A_y, b_y = np.array([[1.0], [-1.0]]), np.array([y.max(), -y.min()])
    else:
        try:
            hull = ConvexHull(Y)
        except QhullError:
            return None
        A_y, b_y = _dedupe(hull.equations[:, :-1], -hull.equations[:, -1])
    A = A_y @ U.T if r else np.zeros((0, n))
    b = b_y + (A @ c if r else 0.0)
    E = W.T
    f = E @ c
    return HForm.build(A, b, E, f, dim=n)


class VPolytope(PolyhedralBody):
    """Convex hull of finitely many points."""

    kind = "vpolytope"

    def __init__(self, vertices):
        V = np.atleast_2d(np.asarray(vertices, dtype=float))
        if V.ndim != 2 or V.shape[0] < 1:
            raise ValueError("need at least one vertex")
        if not np.all(np.isfinite(V)):
            raise ValueError("non-finite vertex")
        self.vertices = V.copy()
        self.vertices.setflags(write=False)
        self.dim = V.shape[1]

    def _hform(self):
        return _hull_hform(self.vertices)

    def contains_lp(self, x, tol: float = 1e-9) -> bool:
        """Reference membership: feasibility of ``V^T lam = x`` with slack ``tol``."""
        x = self._check(x)
        k = self.vertices.shape[0]
        VT = self.vertices.T
        A = np.vstack([VT, -VT])
        b = np.concatenate([x + tol, -x + tol])
        res = lp_minimize(np.zeros(k), A, b, np.ones((1, k)), [1.0], nonneg=np.ones(k, dtype=bool))
        return res.optimal

    def _linf_distance(self, x) -> float:
        k = self.vertices.shape[0]
        VT = self.vertices.T
        n = self.dim
        # variables (lam, t): minimize t, -t <= V^T lam - x <= t
        A = np.vstack([np.hstack([VT, -np.ones((n, 1))]), np.hstack([-VT, -np.ones((n, 1))])])
        b = np.concatenate([x, -x])
        E = np.hstack([np.ones((1, k)), np.zeros((1, 1))])
        c = np.zeros(k + 1)
        c[-1] = 1.0
        res = lp_minimize(c, A, b, E, [1.0], nonneg=np.ones(k + 1, dtype=bool))
        return float(res.value)

    def violation(self, x) -> float:
        if self._h is not None:
            return self._h.violation(np.asarray(x, dtype=float))
        return self._linf_distance(np.asarray(x, dtype=float))

    def violations(self, X) -> np.ndarray:
        if self._h is not None:
            return self._h.violations(np.atleast_2d(np.asarray(X, dtype=float)))
        return np.array([self.violation(x) for x in np.atleast_2d(X)])

    def linearize(self, x):
        if self._h is not None:
            return super().linearize(x)
        x = np.asarray(x, dtype=float)
        y = self.nearest(x)
        g = x - y
        nrm = np.linalg.norm(g)
        if nrm == 0.0:
            return self.violation(x), np.zeros(self.dim)
        return float(nrm), g / nrm

    def linear_constraints(self) -> HForm:
        if self._h is not None:
            return self._h
        lo, hi = self.bounding_box()
        eye = np.eye(self.dim)
        return HForm.build(np.vstack([eye, -eye]), np.concatenate([hi, -lo]), dim=self.dim)

    def nearest(self, p) -> np.ndarray:
        if self._h is not None:
            return super().nearest(p)
        p = self._check(p, "point")
        lam = _fista_simplex(self.vertices.T, p)
        return self.vertices.T @ lam

    def support(self, d):
        d = self._check(d, "direction")
        vals = self.vertices @ d
        i = int(np.argmax(vals))
        return float(vals[i]), self.vertices[i].copy()

    def support_face(self, n, w, tol: float = FACE_TOL) -> np.ndarray:
        n = self._check(n, "normal")
        w = self._check(w, "direction")
        vals = self.vertices @ n
        top = vals.max()
        cand = np.nonzero(vals >= top - tol * (1.0 + abs(top)))[0]
        j = cand[int(np.argmax(self.vertices[cand] @ w))]
        return self.vertices[j].copy()

    def bounding_box(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    @property
    def is_bounded(self) -> bool:
        return True

    def interior_point(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "vertices": self.vertices.tolist()}


def _fista_simplex(M: np.ndarray, p: np.ndarray, max_iter: int = 10000, tol: float = 1e-12):
    """Minimize ``||M lam - p||`` over the probability simplex (accelerated projected gradient)."""
    k = M.shape[1]
    L = max(np.linalg.norm(M, 2) ** 2, 1e-300)
    lam = np.full(k, 1.0 / k)
    y, t = lam.copy(), 1.0
    for _ in range(max_iter):
        g = M.T @ (M @ y - p)
        new = _project_simplex(y - g / L)
        t_next = 0.5 * (1 + math.sqrt(1 + 4 * t * t))
        y = new + ((t - 1) / t_next) * (new - lam)
        if np.linalg.norm(new - lam) < tol:
            lam = new
            break
        lam, t = new, t_next
    return lam


def _project_simplex(v: np.ndarray) -> np.ndarray:
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def _fista_box(G: np.ndarray, r: np.ndarray, max_iter: int = 10000, tol: float = 1e-12):
    """Minimize ``||G t - r||`` over the unit box with step ``1/||G||^2``."""
    k = G.shape[1]
    L = max(np.linalg.norm(G, 2) ** 2, 1e-300)
    t_cur = np.full(k, 0.5)
    y, mom = t_cur.copy(), 1.0
    for _ in range(max_iter):
        new = np.clip(y - G.T @ (G @ y - r) / L, 0.0, 1.0)
        mom_next = 0.5 * (1 + math.sqrt(1 + 4 * mom * mom))
        y = new + ((mom - 1) / mom_next) * (new - t_cur)
        if np.linalg.norm(new - t_cur) < tol:
            t_cur = new
            break
        t_cur, mom = new, mom_next
    return t_cur


class Zonotope(PolyhedralBody):
    """``{c + sum_i t_i g_i : t_i in [0, 1]}``; generators are the columns of ``G``."""

    kind = "zonotope"

    def __init__(self, center, generators):
        c = np.asarray(center, dtype=float).ravel()
        n = c.size
        gens = np.asarray(generators, dtype=float)
        if gens.size == 0:
            G = np.zeros((n, 0))
        else:
            G = np.atleast_2d(gens).reshape(-1, n).T
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(G))):
            raise ValueError("non-finite zonotope data")
        self.center = c
        self.G = G
        self.center.setflags(write=False)
        self.G.setflags(write=False)
        self.dim = n

    @property
    def generators(self) -> list[np.ndarray]:
        return [self.G[:, i].copy() for i in range(self.G.shape[1])]

    def _hform(self):
        n, k = self.G.shape
        if k == 0:
            return HForm.build(np.zeros((0, n)), np.zeros(0), np.eye(n), self.center, dim=n)
        pts = np.vstack([self.center, self.center + self.G.T])
        c0, U, W = _affine_frame(np.vstack([pts, self.center + self.G.sum(axis=1)]))
        r = U.shape[1]
        Gy = U.T @ self.G
        cy = U.T @ (self.center - c0)
        if r == 0:
            A_y, b_y = np.zeros((0, 0)), np.zeros(0)
        elif r == 1:
            g = Gy[0]
            A_y = np.array([[1.0], [-1.0]])
            b_y = np.array([cy[0] + np.maximum(g, 0).sum(), -(cy[0] + np.minimum(g, 0).sum())])
        else:
            if math.comb(k, r - 1) > MAX_ZONOTOPE_FACETS:
                return None
            normals = []
            for subset in itertools.combinations(range(k), r - 1):
                sub = Gy[:, subset]
                _, s, vt = np.linalg.svd(sub.T, full_matrices=True)
                if s.size and s[-1] <= 1e-10 * max(1.0, s[0]):
                    continue
                nu = vt[-1]
                normals.append(nu)
                normals.append(-nu)
            if not normals:
                return None
            N = np.array(normals)
            proj = N @ Gy
            b_y = N @ cy + np.maximum(proj, 0.0).sum(axis=1)
            A_y, b_y = _dedupe(N, b_y)
        A = A_y @ U.T if r else np.zeros((0, n))
        b = b_y + (A @ c0 if r else 0.0)
        return HForm.build(A, b, W.T, W.T @ c0, dim=n)

    def contains_lp(self, x, tol: float = 1e-9) -> bool:
        """Reference membership: feasibility of ``G t = x - c``, ``0 <= t <= 1`` with slack ``tol``."""
        x = self._check(x)
        k = self.G.shape[1]
        r = x - self.center
        if k == 0:
            return bool(np.all(np.abs(r) <= tol))
        A = np.vstack([self.G, -self.G, np.eye(k)])
        b = np.concatenate([r + tol, -r + tol, np.ones(k)])
        res = lp_minimize(np.zeros(k), A, b, nonneg=np.ones(k, dtype=bool))
        return res.optimal

    def violation(self, x) -> float:
        if self._h is not None:
            return self._h.violation(np.asarray(x, dtype=float))
        x = np.asarray(x, dtype=float)
        return float(np.linalg.norm(self.nearest(x) - x))

    def violations(self, X) -> np.ndarray:
        if self._h is not None:
            return self._h.violations(np.atleast_2d(np.asarray(X, dtype=float)))
        return np.array([self.violation(x) for x in np.atleast_2d(X)])

    def linearize(self, x):
        if self._h is not None:
            return super().linearize(x)
        x = np.asarray(x, dtype=float)
        y = self.nearest(x)
        g = x - y
        nrm = np.linalg.norm(g)
        if nrm == 0.0:
            return 0.0, np.zeros(self.dim)
        return float(nrm), g / nrm

    def linear_constraints(self) -> HForm:
        if self._h is not None:
            return self._h
        lo, hi = self.bounding_box()
        eye = np.eye(self.dim)
        return HForm.build(np.vstack([eye, -eye]), np.concatenate([hi, -lo]), dim=self.dim)

    def nearest(self, p) -> np.ndarray:
        if self._h is not None:
            return super().nearest(p)
        p = self._check(p, "point")
        if self.G.shape[1] == 0:
            return self.center.copy()
        t = _fista_box(self.G, p - self.center)
        return self.center + self.G @ t

    def support(self, d):
        d = self._check(d, "direction")
        proj = d @ self.G
        pick = proj > 0
        x = self.center + self.G[:, pick].sum(axis=1)
        return float(d @ x), x

    def support_face(self, n, w, tol: float = FACE_TOL) -> np.ndarray:
        n = self._check(n, "normal")
        w = self._check(w, "direction")
        pn = n @ self.G
        scale = np.linalg.norm(n) * np.linalg.norm(self.G, axis=0)
        flat = np.abs(pn) <= tol * np.maximum(scale, 1e-300)
        pick = (pn > 0) & ~flat
        pick |= flat & (w @ self.G > 0)
        return self.center + self.G[:, pick].sum(axis=1)

    def bounding_box(self):
        return (
            self.center + np.minimum(self.G, 0).sum(axis=1),
            self.center + np.maximum(self.G, 0).sum(axis=1),
        )

    @property
    def is_bounded(self) -> bool:
        return True

    def interior_point(self) -> np.ndarray:
        return self.center + 0.5 * self.G.sum(axis=1)

    def sample_points(self, rng, count: int) -> np.ndarray:
        """Points c + G t with coefficients t uniform in the unit cube."""
        t = rng.random((count, self.G.shape[1]))
        return self.center + t @ self.G.T

    def to_dict(self) -> dict:
        return {"kind": self.kind, "center": self.center.tolist(), "generators": self.G.T.tolist()}


def face_decompose_zonotope(Z: Zonotope, direction, tol: float = 1e-9):
    """Split ``Z`` along the face exposed by ``direction``.

    Returns ``(A, B, w)`` with ``A`` the zonotope of generators orthogonal to the
    direction, ``B`` the remaining generators (carrying the center), and ``w`` the
    shift with ``A + w`` equal to the exposed face.
    """
    d = np.asarray(direction, dtype=float).ravel()
    if d.size != Z.dim:
        raise ValueError("direction dimension mismatch")
    dn = np.linalg.norm(d)
    if dn == 0.0:
        raise ValueError("direction must be nonzero")
    proj = d @ Z.G
    flat = np.abs(proj) <= tol * dn * np.linalg.norm(Z.G, axis=0)
    A = Zonotope(np.zeros(Z.dim), Z.G[:, flat].T)
    B = Zonotope(Z.center, Z.G[:, ~flat].T)
    w = Z.center + Z.G[:, (~flat) & (proj > 0)].sum(axis=1)
    return A, B, w
