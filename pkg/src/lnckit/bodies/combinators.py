"""Bodies built from other bodies: intersection, product, affine image, translate, suspension."""

from __future__ import annotations

import math
from functools import cached_property

import numpy as np
from scipy.linalg import block_diag
from scipy.optimize import brentq, minimize_scalar

from ..linalg import DimensionError
from ..solvers.qp import project_polyhedron
from ..solvers.simplex import SolverError
from .base import Body, HForm, UnsupportedOperation
from .polytopes import PolyhedralBody, VPolytope, Zonotope
from .smooth import Ball, Ellipsoid


class UnsupportedImage(UnsupportedOperation):
    """The exact image of this body under a linear map is not representable."""


def _block_hform(forms: list[HForm]) -> HForm:
    return HForm.build(
        block_diag(*[f.A for f in forms]),
        np.concatenate([f.b for f in forms]),
        block_diag(*[f.E for f in forms]),
        np.concatenate([f.f for f in forms]),
        dim=sum(f.dim for f in forms),
    )


class Translate(Body):
    """``B + w``."""

    kind = "translate"

    def __init__(self, body: Body, shift):
        self.body = body
        self.shift = np.asarray(shift, dtype=float).ravel()
        if self.shift.size != body.dim:
            raise DimensionError("shift dimension does not match body")
        self.shift.setflags(write=False)
        self.dim = body.dim

    def violation(self, x) -> float:
        return self.body.violation(np.asarray(x, dtype=float) - self.shift)

    def violations(self, X) -> np.ndarray:
        return self.body.violations(np.atleast_2d(np.asarray(X, dtype=float)) - self.shift)

    def linearize(self, x):
        return self.body.linearize(np.asarray(x, dtype=float) - self.shift)

    def linear_constraints(self) -> HForm:
        return self.body.linear_constraints().transformed(np.eye(self.dim), -self.shift)

    def hform(self):
        h = self.body.hform()
        return None if h is None else h.transformed(np.eye(self.dim), -self.shift)

    def support(self, d):
        d = self._check(d, "direction")
        val, x = self.body.support(d)
        return val + float(d @ self.shift), None if x is None else x + self.shift

    def support_face(self, n, w, tol: float = 1e-9):
        return self.body.support_face(n, w, tol) + self.shift

    def nearest(self, p):
        p = self._check(p)
        return self.body.nearest(p - self.shift) + self.shift

    def bounding_box(self):
        lo, hi = self.body.bounding_box()
        return lo + self.shift, hi + self.shift

    @property
    def is_bounded(self) -> bool:
        return self.body.is_bounded

    def interior_point(self):
        return self.body.interior_point() + self.shift

    def to_dict(self) -> dict:
        return {"kind": self.kind, "shift": self.shift.tolist(), "body": self.body.to_dict()}


class Product(Body):
    """Cartesian product ``B1 x B2 x ...``."""

    kind = "product"

    def __init__(self, *bodies: Body):
        if len(bodies) == 1 and isinstance(bodies[0], (list, tuple)):
            bodies = tuple(bodies[0])
        if len(bodies) < 2:
            raise ValueError("product needs at least two factors")
        self.bodies = tuple(bodies)
        self.dims = [b.dim for b in self.bodies]
        self.dim = sum(self.dims)
        self._cuts = np.cumsum([0] + self.dims)

    def split(self, x) -> list[np.ndarray]:
        x = np.asarray(x, dtype=float)
        return [x[..., self._cuts[i]:self._cuts[i + 1]] for i in range(len(self.bodies))]

    def violation(self, x) -> float:
        return max(b.violation(xi) for b, xi in zip(self.bodies, self.split(x)))

    def violations(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.max([b.violations(xi) for b, xi in zip(self.bodies, self.split(X))], axis=0)

    def linearize(self, x):
        best = None
        for i, (b, xi) in enumerate(zip(self.bodies, self.split(x))):
            val, g = b.linearize(xi)
            if best is None or val > best[0]:
                grad = np.zeros(self.dim)
                grad[self._cuts[i]:self._cuts[i + 1]] = g
                best = (val, grad)
        return best

    def linear_constraints(self) -> HForm:
        return _block_hform([b.linear_constraints() for b in self.bodies])

    def hform(self):
        forms = [b.hform() for b in self.bodies]
        return None if any(f is None for f in forms) else _block_hform(forms)

    def support(self, d):
        d = self._check(d, "direction")
        total, pts = 0.0, []
        for b, di in zip(self.bodies, self.split(d)):
            val, x = b.support(di)
            if not math.isfinite(val):
                return math.inf, None
            total += val
            pts.append(x)
        return total, np.concatenate(pts)

    def support_face(self, n, w, tol: float = 1e-9):
        n = self._check(n, "normal")
        w = self._check(w, "direction")
        return np.concatenate(
            [b.support_face(ni, wi, tol) for b, ni, wi in zip(self.bodies, self.split(n), self.split(w))]
        )

    def nearest(self, p):
        p = self._check(p)
        return np.concatenate([b.nearest(pi) for b, pi in zip(self.bodies, self.split(p))])

    def bounding_box(self):
        boxes = [b.bounding_box() for b in self.bodies]
        return np.concatenate([lo for lo, _ in boxes]), np.concatenate([hi for _, hi in boxes])

    @property
    def is_bounded(self) -> bool:
        return all(b.is_bounded for b in self.bodies)

    def interior_point(self):
        return np.concatenate([b.interior_point() for b in self.bodies])

    def to_dict(self) -> dict:
        return {"kind": self.kind, "bodies": [b.to_dict() for b in self.bodies]}


class Intersection(Body):
    """``B1 ∩ B2 ∩ ...``; projections by Dykstra's algorithm."""

    kind = "intersection"

    def __init__(self, *bodies: Body, max_iter: int = 10000, step_tol: float = 1e-10):
        if len(bodies) == 1 and isinstance(bodies[0], (list, tuple)):
            bodies = tuple(bodies[0])
        if len(bodies) < 2:
            raise ValueError("intersection needs at least two bodies")
        dims = {b.dim for b in bodies}
        if len(dims) != 1:
            raise DimensionError("intersected bodies must share a dimension")
        self.bodies = tuple(bodies)
        self.dim = dims.pop()
        self.max_iter = max_iter
        self.step_tol = step_tol

    def violation(self, x) -> float:
        return max(b.violation(x) for b in self.bodies)

    def violations(self, X) -> np.ndarray:
        return np.max([b.violations(X) for b in self.bodies], axis=0)

    def linearize(self, x):
        best = None
        for b in self.bodies:
            cand = b.linearize(x)
            if best is None or cand[0] > best[0]:
                best = cand
        return best

    def linear_constraints(self) -> HForm:
        out = self.bodies[0].linear_constraints()
        for b in self.bodies[1:]:
            out = out.stacked(b.linear_constraints())
        return out

    @cached_property
    def _hform_cache(self):
        forms = [b.hform() for b in self.bodies]
        if any(f is None for f in forms):
            return None
        out = forms[0]
        for f in forms[1:]:
            out = out.stacked(f)
        return out

    def hform(self):
        return self._hform_cache

    def support(self, d):
        h = self.hform()
        if h is not None:
            return PolyhedralBody.support(self, d)
        return super().support(d)

    def support_face(self, n, w, tol: float = 1e-9):
        if self.hform() is not None:
            return PolyhedralBody.support_face(self, n, w, tol)
        return super().support_face(n, w, tol)

    def _lp_max(self, d, extra_A=None, extra_b=None):
        return PolyhedralBody._lp_max(self, d, extra_A, extra_b)

    @property
    def _h(self):
        return self.hform()

    def nearest(self, p):
        p = self._check(p)
        if self.violation(p) <= 0.0:
            return p.copy()
        h = self.hform()
        if h is not None:
            return project_polyhedron(p, h.A, h.b, h.E, h.f).x
        return self.dykstra(p)

    def dykstra(self, p) -> np.ndarray:
        """Dykstra's alternating projections; raises SolverError without convergence."""
        x = np.asarray(p, dtype=float).copy()
        incs = [np.zeros_like(x) for _ in self.bodies]
        for _ in range(self.max_iter):
            prev = x.copy()
            for i, b in enumerate(self.bodies):
                y = b.nearest(x + incs[i])
                incs[i] = x + incs[i] - y
                x = y
            if np.linalg.norm(x - prev) < self.step_tol:
                return x
        raise SolverError(f"Dykstra projection did not converge in {self.max_iter} sweeps")

    def bounding_box(self):
        """Intersection of the constituent boxes (a superset box of the body)."""
        boxes = [b.bounding_box() for b in self.bodies]
        lo = np.max([b[0] for b in boxes], axis=0)
        hi = np.min([b[1] for b in boxes], axis=0)
        return lo, hi

    @property
    def is_bounded(self) -> bool:
        lo, hi = self.bounding_box()
        return bool(np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)))

    @cached_property
    def _interior(self):
        from ..solvers.outer import min_violation

        res = min_violation(self)
        if res.value > 1e-9:
            raise ValueError("intersection is empty")
        return res.x

    def interior_point(self):
        return self._interior.copy()

    def to_dict(self) -> dict:
        return {"kind": self.kind, "bodies": [b.to_dict() for b in self.bodies]}


def _exact_image(M: np.ndarray, offset: np.ndarray, body: Body) -> Body:
    if isinstance(body, AffineImage):
        return _exact_image(M @ body.matrix, M @ body.offset + offset, body.body)
    if isinstance(body, Translate):
        return _exact_image(M, M @ body.shift + offset, body.body)
    if isinstance(body, VPolytope):
        return VPolytope(body.vertices @ M.T + offset)
    if isinstance(body, Zonotope):
        return Zonotope(M @ body.center + offset, (M @ body.G).T)
    if isinstance(body, Ellipsoid) and np.linalg.matrix_rank(M) == M.shape[0]:
        # {c + M^-1/2 u : |u| <= 1} maps to shape (A M^-1 A^T)^-1
        S = M @ body._Minv @ M.T
        return Ellipsoid(M @ body.center + offset, np.linalg.inv(0.5 * (S + S.T)))
    raise UnsupportedImage(f"exact image of a {body.kind} body is not representable")


class AffineImage(Body):
    """``{M x + offset : x in B}``, exact for V-polytopes, zonotopes and surjective images of ellipsoids."""

    kind = "affine_image"

    def __init__(self, matrix, body: Body, offset=None):
        M = np.atleast_2d(np.asarray(matrix, dtype=float))
        if M.shape[1] != body.dim:
            raise DimensionError("map columns must match the body dimension")
        self.matrix = M
        self.body = body
        self.offset = np.zeros(M.shape[0]) if offset is None else np.asarray(offset, dtype=float).ravel()
        self.dim = M.shape[0]
        self.image = _exact_image(M, self.offset, body)

    def violation(self, x):
        return self.image.violation(x)

    def violations(self, X):
        return self.image.violations(X)

    def linearize(self, x):
        return self.image.linearize(x)

    def linear_constraints(self):
        return self.image.linear_constraints()

    def hform(self):
        return self.image.hform()

    def support(self, d):
        return self.image.support(d)

    def support_face(self, n, w, tol: float = 1e-9):
        return self.image.support_face(n, w, tol)

    def nearest(self, p):
        return self.image.nearest(p)

    def bounding_box(self):
        return self.image.bounding_box()

    @property
    def is_bounded(self) -> bool:
        return True

    def interior_point(self):
        return self.image.interior_point()

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "map": self.matrix.tolist(), "body": self.body.to_dict()}
        if np.any(self.offset != 0):
            out["offset"] = self.offset.tolist()
        return out


class Suspension(Body):
    """Cone ``{(t y, h t) : y in B0, 0 <= t <= 1}`` over a base body B0.

    With the default height ``h = 1`` this is the usual suspension with apex at
    the origin and the base in the slice ``t = 1``.
    """

    kind = "suspension"

    def __init__(self, base: Body, height: float = 1.0):
        height = float(height)
        if height == 0.0 or not math.isfinite(height):
            raise ValueError("height must be a nonzero finite number")
        self.base = base
        self.height = height
        self.dim = base.dim + 1
        self._sgn = 1.0 if height > 0 else -1.0
        self._base_h = base.hform()
        self._ell = isinstance(base, Ellipsoid)

    # t = s / h is the cone parameter of a point (y, s)
    def _split(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return X[:, :-1], X[:, -1] / self.height

    def _t_pieces(self, s):
        return np.maximum(-self._sgn * s, self._sgn * s - abs(self.height))

    @cached_property
    def _hform_cache(self):
        h0 = self._base_h
        if h0 is None:
            return None
        n0 = self.base.dim
        ht = self.height
        A = np.vstack(
            [
                np.hstack([h0.A, -h0.b[:, None] / ht]),
                np.hstack([np.zeros((1, n0)), [[-self._sgn]]]),
                np.hstack([np.zeros((1, n0)), [[self._sgn]]]),
            ]
        )
        b = np.concatenate([np.zeros(h0.b.size), [0.0, abs(ht)]])
        E = np.hstack([h0.E, -h0.f[:, None] / ht])
        return HForm.build(A, b, E, np.zeros(h0.f.size), dim=self.dim)

    def hform(self):
        return self._hform_cache

    @property
    def _h(self):
        return self._hform_cache

    def violations(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        h = self.hform()
        if h is not None:
            return h.violations(X)
        Y, t = self._split(X)
        tp = self._t_pieces(X[:, -1])
        if self._ell:
            B = self.base
            g = np.linalg.norm((Y - t[:, None] * B.center) @ B._L.T, axis=1)
            persp = (g - t) * B._scale
        else:
            persp = np.array([self._perspective(y, ti) for y, ti in zip(Y, t)])
        return np.maximum(tp, persp)

    def violation(self, x) -> float:
        return float(self.violations(x)[0])

    def _perspective(self, y, t):
        if t <= 0.0:
            return float(np.linalg.norm(y))
        return t * self.base.violation(y / t)

    def linearize(self, x):
        x = np.asarray(x, dtype=float)
        h = self.hform()
        if h is not None:
            return PolyhedralBody.linearize(self, x)
        y, s = x[:-1], x[-1]
        t = s / self.height
        grad_t = np.zeros(self.dim)
        lower = -self._sgn * s
        upper = self._sgn * s - abs(self.height)
        best_val, best_grad = lower, grad_t.copy()
        best_grad[-1] = -self._sgn
        if upper > best_val:
            best_val, best_grad = upper, grad_t.copy()
            best_grad[-1] = self._sgn
        if t > 0.0:
            v0, g0 = self.base.linearize(y / t)
            val = t * v0
            # gradient of t * f(y / t) in (y, t), then chain rule t = s / h
            dt = v0 - float(g0 @ (y / t))
            grad = np.concatenate([g0, [dt / self.height]])
        else:
            nrm = float(np.linalg.norm(y))
            if nrm == 0.0:
                return best_val, best_grad
            a = y / nrm
            hb, _ = self.base.support(a)
            val = nrm - hb * t
            grad = np.concatenate([a, [-hb / self.height]])
        if val > best_val:
            return val, grad
        return best_val, best_grad

    def linear_constraints(self) -> HForm:
        h0 = self.base.linear_constraints()
        n0 = self.base.dim
        ht = self.height
        A = np.vstack(
            [
                np.hstack([h0.A, -h0.b[:, None] / ht]),
                np.hstack([np.zeros((1, n0)), [[-self._sgn]]]),
                np.hstack([np.zeros((1, n0)), [[self._sgn]]]),
            ]
        )
        b = np.concatenate([np.zeros(h0.b.size), [0.0, abs(ht)]])
        E = np.hstack([h0.E, -h0.f[:, None] / ht])
        return HForm.build(A, b, E, np.zeros(h0.f.size), dim=self.dim)

    def support(self, d):
        d = self._check(d, "direction")
        hb, z = self.base.support(d[:-1])
        if not math.isfinite(hb):
            return math.inf, None
        top = hb + self.height * d[-1]
        if top > 0.0:
            return top, np.concatenate([z, [self.height]])
        return 0.0, np.zeros(self.dim)

    def support_face(self, n, w, tol: float = 1e-9):
        n = self._check(n, "normal")
        w = self._check(w, "direction")
        ny, ns = n[:-1], n[-1]
        hb, _ = self.base.support(ny)
        kappa = hb + self.height * ns
        scale = abs(hb) + abs(self.height * ns) + float(np.linalg.norm(n))
        if np.linalg.norm(n) == 0.0:
            return self.support(w)[1]
        if kappa < -tol * scale:
            return np.zeros(self.dim)
        if np.linalg.norm(ny) == 0.0:
            z = self.base.support(w[:-1])[1]
        else:
            z = self.base.support_face(ny, w[:-1], tol)
        top = np.concatenate([z, [self.height]])
        if kappa > tol * scale or float(w @ top) > 0.0:
            return top
        return np.zeros(self.dim)

    def _base_dist(self, y0, t):
        """Distance from y0 to the scaled base t * B0 and the nearest point."""
        if t <= 0.0:
            return float(np.linalg.norm(y0)), np.zeros_like(y0)
        z = t * self.base.nearest(y0 / t)
        return float(np.linalg.norm(y0 - z)), z

    def nearest(self, p):
        p = self._check(p)
        if self.violation(p) <= 0.0:
            return p.copy()
        h = self.hform()
        if h is not None:
            return project_polyhedron(p, h.A, h.b, h.E, h.f).x
        y0, s0 = p[:-1], p[-1]
        ht = self.height

        def obj(t):
            return (ht * t - s0) ** 2 + self._base_dist(y0, t)[0] ** 2

        t = None
        if isinstance(self.base, Ball):
            c, r = self.base.center, self.base.radius

            def dobj(t):
                u = y0 - t * c
                nu = float(np.linalg.norm(u))
                gap = nu - t * r
                if gap <= 0.0:
                    return 2 * ht * (ht * t - s0)
                du = -float(c @ u) / nu if nu > 0 else 0.0
                return 2 * ht * (ht * t - s0) + 2 * gap * (du - r)

            lo, hi = dobj(0.0), dobj(1.0)
            if lo >= 0.0:
                t = 0.0
            elif hi <= 0.0:
                t = 1.0
            else:
                t = brentq(dobj, 0.0, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        else:
            res = minimize_scalar(obj, bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-12})
            t = min([0.0, 1.0, float(res.x)], key=obj)
        _, z = self._base_dist(y0, t)
        return np.concatenate([z, [ht * t]])

    def bounding_box(self):
        lo0, hi0 = self.base.bounding_box()
        lo = np.concatenate([np.minimum(lo0, 0.0), [min(0.0, self.height)]])
        hi = np.concatenate([np.maximum(hi0, 0.0), [max(0.0, self.height)]])
        return lo, hi

    @property
    def is_bounded(self) -> bool:
        return self.base.is_bounded

    def interior_point(self):
        return 0.5 * np.concatenate([self.base.interior_point(), [self.height]])

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "base": self.base.to_dict()}
        if self.height != 1.0:
            out["height"] = self.height
        return out
