"""Non-polyhedral primitives: ellipsoids, balls, the 2x2 PSD cap and an epigraph."""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq

from .base import Body, HForm


class Ellipsoid(Body):
    """``{x : (x - c)^T M (x - c) <= 1}`` for symmetric positive-definite ``M``.

    The violation ``(sqrt(q) - 1) / sqrt(lambda_max)`` never exceeds the
    Euclidean distance to the body.
    """

    kind = "ellipsoid"

    def __init__(self, center, shape):
        c = np.asarray(center, dtype=float).ravel()
        M = np.atleast_2d(np.asarray(shape, dtype=float))
        if M.shape != (c.size, c.size):
            raise ValueError("shape matrix must be n x n")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(M))):
            raise ValueError("non-finite ellipsoid data")
        if np.max(np.abs(M - M.T)) > 1e-12 * max(1.0, np.abs(M).max()):
            raise ValueError("shape matrix must be symmetric")
        M = 0.5 * (M + M.T)
        lam, Q = np.linalg.eigh(M)
        if lam[0] <= 0:
            raise ValueError("shape matrix must be positive definite")
        self.dim = c.size
        self.center = c
        self.M = M
        self._lam = lam
        self._Q = Q
        self._L = np.sqrt(lam)[:, None] * Q.T
        self._Minv = (Q / lam) @ Q.T
        self._scale = 1.0 / math.sqrt(lam[-1])
        for arr in (self.center, self.M):
            arr.setflags(write=False)

    def _gauge(self, x):
        return float(np.linalg.norm(self._L @ (x - self.center)))

    def violation(self, x) -> float:
        return (self._gauge(np.asarray(x, dtype=float)) - 1.0) * self._scale

    def violations(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        g = np.linalg.norm((X - self.center) @ self._L.T, axis=1)
        return (g - 1.0) * self._scale

    def linearize(self, x):
        x = np.asarray(x, dtype=float)
        g = self._gauge(x)
        if g == 0.0:
            return -self._scale, np.zeros(self.dim)
        grad = self.M @ (x - self.center) / g * self._scale
        return (g - 1.0) * self._scale, grad

    def linear_constraints(self) -> HForm:
        lo, hi = self.bounding_box()
        eye = np.eye(self.dim)
        return HForm.build(np.vstack([eye, -eye]), np.concatenate([hi, -lo]), dim=self.dim)

    def support(self, d):
        d = self._check(d, "direction")
        md = self._Minv @ d
        s = math.sqrt(max(float(d @ md), 0.0))
        if s == 0.0:
            return float(d @ self.center), self.center.copy()
        x = self.center + md / s
        return float(d @ x), x

    def support_face(self, n, w, tol: float = 1e-9) -> np.ndarray:
        n = self._check(n, "normal")
        if np.linalg.norm(n) == 0.0:
            return self.support(w)[1]
        return self.support(n)[1]

    def nearest(self, p) -> np.ndarray:
        p = self._check(p, "point")
        if self._gauge(p) <= 1.0:
            return p.copy()
        z = self._Q.T @ (p - self.center)
        lam = self._lam

        def phi(mu):
            return float(np.sum(lam * (z / (1.0 + mu * lam)) ** 2)) - 1.0

        hi = math.sqrt(float(np.sum(z * z / lam))) + 1.0
        mu = brentq(phi, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
        x = self.center + self._Q @ (z / (1.0 + mu * lam))
        g = self._gauge(x)
        if g > 1.0:
            x = self.center + (x - self.center) / g
        return x

    def bounding_box(self):
        r = np.sqrt(np.diag(self._Minv))
        return self.center - r, self.center + r

    @property
    def is_bounded(self) -> bool:
        return True

    def interior_point(self) -> np.ndarray:
        return self.center.copy()

    def to_dict(self) -> dict:
        return {"kind": self.kind, "center": self.center.tolist(), "shape": self.M.tolist()}


class Ball(Ellipsoid):
    """Euclidean ball; the violation is the exact signed distance."""

    kind = "ball"

    def __init__(self, center, radius: float = 1.0):
        radius = float(radius)
        if not radius > 0 or not math.isfinite(radius):
            raise ValueError("radius must be positive")
        c = np.asarray(center, dtype=float).ravel()
        super().__init__(c, np.eye(c.size) / radius**2)
        self.radius = radius

    def violation(self, x) -> float:
        return float(np.linalg.norm(np.asarray(x, dtype=float) - self.center)) - self.radius

    def violations(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.linalg.norm(X - self.center, axis=1) - self.radius

    def linearize(self, x):
        x = np.asarray(x, dtype=float)
        r = x - self.center
        nrm = float(np.linalg.norm(r))
        if nrm == 0.0:
            return -self.radius, np.zeros(self.dim)
        return nrm - self.radius, r / nrm

    def nearest(self, p) -> np.ndarray:
        p = self._check(p, "point")
        r = p - self.center
        nrm = float(np.linalg.norm(r))
        if nrm <= self.radius:
            return p.copy()
        return self.center + r * (self.radius / nrm)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "center": self.center.tolist(), "radius": self.radius}


# --- PSD cap ---------------------------------------------------------------

_R2 = math.sqrt(2.0)


def _psd_reflect(x):
    return np.array([1.0 - x[0], -x[1], 1.0 - x[2]])


def _to_iso(x):
    a, b, c = x
    return (a + c) / _R2, (a - c) / _R2, b


def _from_iso(sig, dlt, b):
    return np.array([(sig + dlt) / _R2, b, (sig - dlt) / _R2])


def _argmax_periodic(f, h, grid: int = 720):
    """Maximize a smooth periodic ``f`` with derivative numerator ``h`` (sign of f')."""
    phis = np.linspace(0.0, 2 * math.pi, grid, endpoint=False)
    vals = f(phis)
    i = int(np.argmax(vals))
    step = phis[1] - phis[0]
    lo, hi = phis[i] - step, phis[i] + step
    best_phi, best_val = phis[i], vals[i]
    h_lo, h_hi = h(lo), h(hi)
    if h_lo > 0 > h_hi:
        phi = brentq(h, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        val = float(f(np.array([phi]))[0])
        if val >= best_val:
            best_phi, best_val = phi, val
    return best_phi, best_val


def _project_lower_cone(p):
    """Nearest point of ``{A >= 0}`` (in (a,b,c) coordinates) to ``p``."""
    s0, d0, b0 = _to_iso(p)

    def alpha(phi):
        return s0 + d0 * np.cos(phi) + b0 * np.sin(phi) / _R2

    def beta(phi):
        return 1.0 + np.cos(phi) ** 2 + 0.5 * np.sin(phi) ** 2

    def gain(phi):
        a = np.maximum(alpha(phi), 0.0)
        return a * a / beta(phi)

    def dnum(phi):
        da = -d0 * math.sin(phi) + b0 * math.cos(phi) / _R2
        db = -math.sin(phi) * math.cos(phi)
        return 2 * da * beta(phi) - alpha(phi) * db

    phi, val = _argmax_periodic(gain, dnum)
    if val <= 0.0:
        return np.zeros(3)
    r = alpha(phi) / beta(phi)
    return _from_iso(r, r * math.cos(phi), r * math.sin(phi) / _R2)


def _project_rim(p):
    s0, d0, b0 = _to_iso(p)

    def neg_dist(phi):
        return -((d0 - np.cos(phi) / _R2) ** 2 + (b0 - np.sin(phi) / 2) ** 2)

    def dnum(phi):
        # derivative of neg_dist up to a positive factor
        return -((d0 - math.cos(phi) / _R2) * math.sin(phi) / _R2 - (b0 - math.sin(phi) / 2) * math.cos(phi) / 2)

    phi, _ = _argmax_periodic(neg_dist, dnum)
    return _from_iso(1.0 / _R2, math.cos(phi) / _R2, math.sin(phi) / 2)


class PSDCap2(Body):
    """Symmetric 2x2 matrices ``[[a, b], [b, c]]`` with ``0 <= A <= I``, as points (a, b, c).

    The violation is ``max(-lambda_min, lambda_max - 1)``.
    """

    kind = "psdcap2"
    dim = 3

    @staticmethod
    def eigenvalues(x) -> tuple[float, float]:
        a, b, c = np.asarray(x, dtype=float)
        m = 0.5 * (a + c)
        rho = math.hypot(0.5 * (a - c), b)
        return m - rho, m + rho

    def violation(self, x) -> float:
        lo, hi = self.eigenvalues(x)
        return max(-lo, hi - 1.0)

    def violations(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        m = 0.5 * (X[:, 0] + X[:, 2])
        rho = np.hypot(0.5 * (X[:, 0] - X[:, 2]), X[:, 1])
        return np.maximum(rho - m, m + rho - 1.0)

    def linearize(self, x):
        a, b, c = np.asarray(x, dtype=float)
        m = 0.5 * (a + c)
        rho = math.hypot(0.5 * (a - c), b)
        g_m = np.array([0.5, 0.0, 0.5])
        g_rho = np.zeros(3) if rho == 0.0 else np.array([(a - c) / (4 * rho), b / rho, -(a - c) / (4 * rho)])
        lower, upper = rho - m, m + rho - 1.0
        if lower >= upper:
            return lower, g_rho - g_m
        return upper, g_rho + g_m

    def linear_constraints(self) -> HForm:
        A = np.array(
            [[-1, 0, 0], [1, 0, 0], [0, 0, -1], [0, 0, 1], [0, 1, 0], [0, -1, 0]], dtype=float
        )
        b = np.array([0, 1, 0, 1, 0.5, 0.5])
        return HForm.build(A, b)

    @staticmethod
    def _matrix(d):
        return np.array([[d[0], 0.5 * d[1]], [0.5 * d[1], d[2]]])

    @staticmethod
    def _point(P):
        return np.array([P[0, 0], P[0, 1], P[1, 1]])

    def support(self, d):
        d = self._check(d, "direction")
        lam, U = np.linalg.eigh(self._matrix(d))
        P = np.zeros((2, 2))
        for i in range(2):
            if lam[i] > 0:
                P += np.outer(U[:, i], U[:, i])
        x = self._point(P)
        return float(d @ x), x

    def support_face(self, n, w, tol: float = 1e-9) -> np.ndarray:
        n = self._check(n, "normal")
        w = self._check(w, "direction")
        lam, U = np.linalg.eigh(self._matrix(n))
        W = self._matrix(w)
        scale = max(np.abs(lam).max(), 1e-300)
        P = np.zeros((2, 2))
        for i in range(2):
            u = U[:, i]
            if lam[i] > tol * scale or (abs(lam[i]) <= tol * scale and u @ W @ u > 0):
                P += np.outer(u, u)
        return self._point(P)

    def nearest(self, p) -> np.ndarray:
        p = self._check(p, "point")
        if self.violation(p) <= 0.0:
            return p.copy()
        cands = [_project_rim(p)]
        lower = _project_lower_cone(p)
        if self.violation(lower) <= 1e-12:
            cands.append(lower)
        upper = _psd_reflect(_project_lower_cone(_psd_reflect(p)))
        if self.violation(upper) <= 1e-12:
            cands.append(upper)
        dists = [np.linalg.norm(c - p) for c in cands]
        return cands[int(np.argmin(dists))]

    def bounding_box(self):
        return np.array([0.0, -0.5, 0.0]), np.array([1.0, 0.5, 1.0])

    @property
    def is_bounded(self) -> bool:
        return True

    def interior_point(self) -> np.ndarray:
        return np.array([0.5, 0.0, 0.5])

    def determinant(self, x) -> float:
        a, b, c = np.asarray(x, dtype=float)
        return a * c - b * b

    def to_dict(self) -> dict:
        return {"kind": self.kind}


# --- epigraph ----------------------------------------------------------------


class Epigraph19(Body):
    """``{(x, y, z) : x, y >= 0, x + y <= 1, z >= (1 - y)^3 / x}``.

    At ``x = 0`` the quotient is read as 0 for ``y = 1`` and the fiber is the
    ray ``{(0, 1, z) : z >= 0}``. Membership uses the convex reformulation
    ``(1 - y) - (x z)^(1/3) <= 0`` with ``z >= 0``, which encodes that
    convention exactly.
    """

    kind = "epigraph19"
    dim = 3
    _LIN_A = np.array([[-1.0, 0, 0], [0, -1.0, 0], [1.0, 1.0, 0], [0, 0, -1.0]])
    _LIN_B = np.array([0.0, 0.0, 1.0, 0.0])

    @staticmethod
    def _h(x, y, z):
        return (1.0 - y) - np.cbrt(np.maximum(x, 0.0) * np.maximum(z, 0.0))

    def _lin(self, X):
        norms = np.linalg.norm(self._LIN_A, axis=1)
        return (X @ self._LIN_A.T - self._LIN_B) / norms

    def violation(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(max(np.max(self._lin(x[None, :])), self._h(*x)))

    def violations(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.maximum(self._lin(X).max(axis=1), self._h(X[:, 0], X[:, 1], X[:, 2]))

    def linearize(self, x):
        x = np.asarray(x, dtype=float)
        lin = self._lin(x[None, :])[0]
        i = int(np.argmax(lin))
        hval = float(self._h(*x))
        if lin[i] >= hval:
            return float(lin[i]), self._LIN_A[i] / np.linalg.norm(self._LIN_A[i])
        # The cube-root term is not differentiable on the faces x = 0 or z = 0;
        # linearize at a nearby positive point, shrinking the shift until the
        # minorant is tight enough at x.
        best = None
        for k in range(1, 12):
            eta = 10.0 ** (-3 * k)
            w = np.array([max(x[0], eta), x[1], max(x[2], eta)])
            r = np.cbrt(w[0] * w[2])
            grad = np.array([-r / (3 * w[0]), -1.0, -r / (3 * w[2])])
            val = float(self._h(*w) + grad @ (x - w))
            best = (val, grad)
            if x[0] >= eta and x[2] >= eta:
                break
            if val >= 0.9 * hval:
                break
        return best

    def linear_constraints(self) -> HForm:
        return HForm.build(self._LIN_A, self._LIN_B)

    def support(self, d):
        d = self._check(d, "direction")
        if d[2] > 0:
            return math.inf, None
        return super().support(d)

    def bounding_box(self):
        return np.zeros(3), np.array([1.0, 1.0, math.inf])

    @property
    def is_bounded(self) -> bool:
        return False

    def interior_point(self) -> np.ndarray:
        return np.array([0.3, 0.3, 2.0])

    def to_dict(self) -> dict:
        return {"kind": self.kind}
