"""Dense linear algebra: linear maps with cached kernel / row-space bases."""

from __future__ import annotations

import numpy as np
import scipy.linalg

RANK_RTOL = 1e-10


def as_vector(x, dim: int | None = None, name: str = "vector") -> np.ndarray:
    """Coerce ``x`` to a finite 1-D float array, optionally checking its length."""
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} must have dimension >= 1")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    if dim is not None and arr.size != dim:
        raise DimensionError(f"{name} has dimension {arr.size}, expected {dim}")
    return arr


class DimensionError(ValueError):
    pass


def canonical_basis(basis: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of span(basis).

    Gram-Schmidt over the projected standard basis vectors in index order, so a
    coordinate-aligned subspace comes back as the matching unit vectors.
    Residuals shorter than 1/(2 sqrt(n)) are skipped: the skipped ones carry
    less than a quarter of the k units of squared length, so k vectors are
    always found, and none is normalized from a round-off sized remainder.
    """
    n, k = basis.shape
    if k == 0:
        return np.zeros((n, 0))
    tol = 0.5 / np.sqrt(n)
    q, _ = np.linalg.qr(basis)
    proj = q @ q.T
    out: list[np.ndarray] = []
    for i in range(n):
        w = proj[:, i].copy()
        for _ in range(2):
            for u in out:
                w -= (u @ w) * u
        norm = np.linalg.norm(w)
        if norm > tol:
            out.append(w / norm)
        if len(out) == k:
            break
    return np.column_stack(out)


class LinearMap:
    """Dense m x n real matrix viewed as a map R^n -> R^m.

    The kernel and row-space bases come from a column-pivoted Householder QR of
    the transpose; the kernel basis is then canonicalized (see
    :func:`canonical_basis`) so it does not depend on LAPACK sign choices.
    """

    def __init__(self, matrix):
        a = np.atleast_2d(np.asarray(matrix, dtype=float))
        if a.ndim != 2 or a.size == 0:
            raise ValueError("matrix must be a non-empty 2-D array")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix has non-finite entries")
        a = a.copy()
        a.setflags(write=False)
        self.matrix = a
        q, r, _ = scipy.linalg.qr(a.T, pivoting=True)
        pivots = np.abs(np.diag(r)) if r.size else np.zeros(0)
        if pivots.size == 0 or pivots[0] == 0.0:
            rank = 0
        else:
            rank = int(np.sum(pivots > RANK_RTOL * pivots[0]))
        self.rank = rank
        kernel = canonical_basis(q[:, rank:])
        rows = q[:, :rank].copy()
        kernel.setflags(write=False)
        rows.setflags(write=False)
        self.kernel = kernel
        self.row_space = rows

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def cols(self) -> int:
        return self.matrix.shape[1]

    def __call__(self, x) -> np.ndarray:
        return self.apply(x)

    def apply(self, x) -> np.ndarray:
        x = as_vector(x, self.cols, "argument")
        return self.matrix @ x

    def compose(self, other: "LinearMap") -> "LinearMap":
        """``self`` after ``other``."""
        if other.rows != self.cols:
            raise DimensionError("incompatible shapes for composition")
        return LinearMap(self.matrix @ other.matrix)

    def particular_solution(self, y) -> np.ndarray:
        """Minimum-norm x with T x = y (least squares if y is off the range)."""
        y = as_vector(y, self.rows, "target")
        x, *_ = np.linalg.lstsq(self.matrix, y, rcond=None)
        return x

    def to_list(self) -> list:
        return self.matrix.tolist()

    def __repr__(self) -> str:
        return f"LinearMap({self.rows}x{self.cols}, rank={self.rank})"


def nullspace(lmap: LinearMap) -> list[np.ndarray]:
    """Orthonormal basis of the kernel as a list of vectors (empty if trivial)."""
    return [lmap.kernel[:, j].copy() for j in range(lmap.kernel.shape[1])]


def apply(lmap: LinearMap, x) -> np.ndarray:
    return lmap.apply(x)


def quotient_map(v) -> LinearMap:
    """Orthogonal projection along ``v`` expressed in a canonical basis of v-perp."""
    v = as_vector(v, name="direction")
    if np.linalg.norm(v) == 0.0:
        raise ValueError("direction must be nonzero")
    perp = LinearMap(v[None, :]).kernel
    return LinearMap(perp.T)


def coordinate_projection(n: int, keep) -> LinearMap:
    keep = list(keep)
    m = np.zeros((len(keep), n))
    for i, j in enumerate(keep):
        m[i, j] = 1.0
    return LinearMap(m)
