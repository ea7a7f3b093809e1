"""Convex-body oracle contract.

Every body exposes a convex, distance-like ``violation`` function: it is at most
the Euclidean distance to the body outside it and non-positive inside it.
Membership at tolerance ``tol`` is ``violation <= tol``, so the same number
doubles as the OUTSIDE margin recorded in witnesses.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from ..linalg import DimensionError, as_vector


class Membership(str, enum.Enum):
    INSIDE = "INSIDE"
    OUTSIDE = "OUTSIDE"


class UnsupportedOperation(NotImplementedError):
    """The body does not provide this oracle."""


@dataclass(frozen=True)
class HForm:
    """Polyhedron ``{x : A x <= b, E x = f}`` with unit-norm rows."""

    A: np.ndarray
    b: np.ndarray
    E: np.ndarray
    f: np.ndarray

    @classmethod
    def build(cls, A, b, E=None, f=None, dim: int | None = None) -> "HForm":
        A = np.asarray(A, dtype=float)
        n = A.shape[1] if A.ndim == 2 and A.size else dim
        if n is None:
            raise ValueError("cannot infer dimension of empty constraint system")
        A = A.reshape(-1, n)
        b = np.asarray(b, dtype=float).ravel()
        E = np.zeros((0, n)) if E is None else np.asarray(E, dtype=float).reshape(-1, n)
        f = np.zeros(0) if f is None else np.asarray(f, dtype=float).ravel()
        A, b = _normalize_rows(A, b)
        E, f = _normalize_rows(E, f)
        for arr in (A, b, E, f):
            arr.setflags(write=False)
        return cls(A, b, E, f)

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    def violation(self, x: np.ndarray) -> float:
        out = -np.inf
        if self.b.size:
            out = float(np.max(self.A @ x - self.b))
        if self.f.size:
            out = max(out, float(np.max(np.abs(self.E @ x - self.f))))
        return out

    def violations(self, X: np.ndarray) -> np.ndarray:
        out = np.full(X.shape[0], -np.inf)
        if self.b.size:
            out = np.max(X @ self.A.T - self.b, axis=1)
        if self.f.size:
            out = np.maximum(out, np.max(np.abs(X @ self.E.T - self.f), axis=1))
        return out

    def stacked(self, other: "HForm") -> "HForm":
        return HForm.build(
            np.vstack([self.A, other.A]),
            np.concatenate([self.b, other.b]),
            np.vstack([self.E, other.E]),
            np.concatenate([self.f, other.f]),
            dim=self.dim,
        )

    def transformed(self, M: np.ndarray, shift: np.ndarray) -> "HForm":
        """Constraints on z such that ``M z + shift`` satisfies this form."""
        return HForm.build(
            self.A @ M, self.b - self.A @ shift, self.E @ M, self.f - self.E @ shift, dim=M.shape[1]
        )


def _normalize_rows(A, b):
    if A.shape[0] == 0:
        return A.copy(), b.copy()
    norms = np.linalg.norm(A, axis=1)
    keep = norms > 0.0
    if np.any(~keep & (b < 0)):
        raise ValueError("constraint 0 <= b with negative b: empty polyhedron")
    return A[keep] / norms[keep, None], b[keep] / norms[keep]


class Body:
    """Closed convex subset of R^n accessed through oracles.

    Subclasses implement ``violation`` and ``linearize`` at minimum. Bodies are
    immutable after construction.
    """

    dim: int
    kind: str = "body"

    # -- membership ------------------------------------------------------
    def violation(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def violations(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.array([self.violation(x) for x in X])

    def membership(self, x, tol: float = 1e-9) -> Membership:
        if tol <= 0:
            raise ValueError("tol must be positive")
        x = self._check(x)
        return Membership.INSIDE if self.violation(x) <= tol else Membership.OUTSIDE

    def contains(self, x, tol: float = 1e-9) -> bool:
        return self.membership(x, tol) is Membership.INSIDE

    def margin(self, x) -> float:
        """Signed violation; positive values are distances-like OUTSIDE margins."""
        return float(self.violation(self._check(x)))

    # -- geometry ----------------------------------------------------------
    def linearize(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        """Affine minorant ``value + grad @ (z - x)`` of the violation.

        The minorant is valid on the polyhedron returned by
        :meth:`linear_constraints`, which is all a cutting-plane method needs.
        """
        raise NotImplementedError

    def linear_constraints(self) -> HForm:
        """Exact polyhedral superset of the body (possibly with no rows)."""
        return HForm.build(np.zeros((0, self.dim)), np.zeros(0), dim=self.dim)

    def hform(self) -> HForm | None:
        """Exact H-representation when the body is a polyhedron."""
        return None

    @property
    def is_polyhedral(self) -> bool:
        return self.hform() is not None

    def support(self, d) -> tuple[float, np.ndarray | None]:
        from ..solvers.outer import generic_support

        d = self._check(d, "direction")
        return generic_support(self, d)

    def support_face(self, n, w, tol: float = 1e-9) -> np.ndarray:
        """Maximizer of ``w`` over the face exposed by ``n`` (lexicographic support)."""
        from ..solvers.outer import generic_lexmax

        return generic_lexmax(self, [self._check(n, "normal"), self._check(w, "direction")])

    def nearest(self, p) -> np.ndarray:
        from ..solvers.outer import generic_nearest

        p = self._check(p, "point")
        if self.violation(p) <= 0.0:
            return p.copy()
        return generic_nearest(self, p)

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.empty(self.dim)
        hi = np.empty(self.dim)
        for i in range(self.dim):
            e = np.zeros(self.dim)
            e[i] = 1.0
            hi[i] = self.support(e)[0]
            lo[i] = -self.support(-e)[0]
        return lo, hi

    @property
    def is_bounded(self) -> bool:
        lo, hi = self.bounding_box()
        return bool(np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)))

    def interior_point(self) -> np.ndarray:
        """A point of the body, in its relative interior when cheaply available."""
        raise NotImplementedError

    def diameter_estimate(self) -> float:
        lo, hi = self.bounding_box()
        span = np.where(np.isfinite(hi - lo), hi - lo, 0.0)
        d = float(np.linalg.norm(span))
        return d if d > 0 else 1.0

    # -- io ------------------------------------------------------------------
    def to_dict(self) -> dict:
        raise NotImplementedError

    # -- helpers ---------------------------------------------------------------
    def _check(self, x, name: str = "point") -> np.ndarray:
        v = as_vector(x, name=name)
        if v.size != self.dim:
            raise DimensionError(f"{name} has dimension {v.size}, body has dimension {self.dim}")
        return v

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dim={self.dim})"
