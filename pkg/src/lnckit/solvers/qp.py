"""Euclidean projection onto polyhedra.

The projection ``min ||x - p||  s.t.  A x <= b, E x = f`` is reduced to a
least-distance program (LDP), solved through the classical NNLS dual
(bounded-variable least squares as a fallback), then polished on the detected active
set until the KKT conditions hold to round-off.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import lsq_linear, nnls

from .simplex import SolverError


class InfeasibleError(ValueError):
    """The constraint system has no solution."""


@dataclass
class Projection:
    x: np.ndarray
    multipliers: np.ndarray
    kkt_residual: float


def _ldp(G: np.ndarray, h: np.ndarray, method: str = "nnls"):
    """Least-norm w with G w >= h and its multipliers, or raise InfeasibleError.

    ``nnls`` is fast but can stop short of the optimum, so callers verify its
    answer and fall back to ``bvls``.
    """
    m, n = G.shape
    if m == 0:
        return np.zeros(n), np.zeros(0)
    E = np.vstack([G.T, h[None, :]])
    f = np.zeros(n + 1)
    f[-1] = 1.0
    u = None
    if method == "nnls":
        try:
            u, _ = nnls(E, f, maxiter=50 * m)
        except RuntimeError:
            u = None
    if u is None:
        u = lsq_linear(E, f, bounds=(0.0, np.inf), method="bvls", tol=1e-14, max_iter=max(100, 20 * m)).x
    r = E @ u - f
    if abs(r[-1]) < 1e-13:
        if method == "nnls":
            return _ldp(G, h, method="bvls")
        raise InfeasibleError("least-distance program is infeasible")
    # w = G^T lam with lam = u / (1 - h^T u)
    return -r[:n] / r[-1], -u / r[-1]


def _polish(p, A, b, x, tol):
    """Re-solve the projection on the active set of ``x`` and certify KKT."""
    best = None
    for thresh in (1e-9, 1e-7, 1e-5):
        act = np.nonzero(A @ x - b > -thresh * (1.0 + np.abs(b)))[0]
        if act.size == 0:
            cand, mu = p.copy(), np.zeros(0)
        else:
            As, bs = A[act], b[act]
            lam, *_ = np.linalg.lstsq(As @ As.T, As @ p - bs, rcond=None)
            cand = p - As.T @ lam
            if np.any(lam < 0):
                # degenerate active set; pick nonnegative multipliers for the same point
                mu, _ = nnls(As.T, p - cand)
                if np.linalg.norm(As.T @ mu - (p - cand)) > 1e-9 * (1.0 + np.linalg.norm(p - cand)):
                    continue
                lam = mu
            mu = lam
        viol = float(np.max(A @ cand - b, initial=-np.inf))
        if viol > tol:
            continue
        full = np.zeros(A.shape[0])
        full[act] = mu
        res = max(viol, 0.0)
        if best is None or res < best.kkt_residual:
            best = Projection(cand, full, res)
        if res == 0.0:
            break
    return best


def project_polyhedron(p, A=None, b=None, E=None, f=None, tol: float = 1e-10) -> Projection:
    """Nearest point to ``p`` in ``{x : A x <= b, E x = f}``.

    Raises InfeasibleError when the set is empty.
    """
    p = np.asarray(p, dtype=float).ravel()
    n = p.size
    A = np.zeros((0, n)) if A is None else np.asarray(A, dtype=float).reshape(-1, n)
    b = np.zeros(0) if b is None else np.asarray(b, dtype=float).ravel()
    shift = np.zeros(n)
    Z = None
    if E is not None and np.asarray(E).size:
        E = np.asarray(E, dtype=float).reshape(-1, n)
        f = np.asarray(f, dtype=float).ravel()
        shift, *_ = np.linalg.lstsq(E, f, rcond=None)
        if np.linalg.norm(E @ shift - f) > 1e-9 * (1.0 + np.linalg.norm(f)):
            raise InfeasibleError("equality constraints are inconsistent")
        # orthonormal basis of ker E
        _, s, vt = np.linalg.svd(E)
        rank = int(np.sum(s > 1e-12 * max(1.0, s[0] if s.size else 1.0)))
        Z = vt[rank:].T
    if Z is not None:
        As = A @ Z
        bs = b - A @ shift
        ps = Z.T @ (p - shift)
        sub = _project_ineq(ps, As, bs, tol)
        x = shift + Z @ sub.x
        return Projection(x, sub.multipliers, sub.kkt_residual)
    return _project_ineq(p, A, b, tol)


def _project_ineq(p, A, b, tol):
    if A.shape[0] == 0 or np.all(A @ p - b <= 0.0):
        return Projection(p.copy(), np.zeros(A.shape[0]), 0.0)
    norms = np.linalg.norm(A, axis=1)
    zero = norms == 0.0
    if np.any(b[zero] < 0.0):
        raise InfeasibleError("constraint 0 <= b with negative b")
    keep = ~zero
    An = A[keep] / norms[keep, None]
    bn = b[keep] / norms[keep]
    w, lam = _ldp(-An, An @ p - bn)
    x = p + w
    slack = An @ x - bn
    viol = float(np.max(slack))
    # the fast dual answer is usually exact already: feasible, stationary and
    # complementary; otherwise re-solve with bvls and polish on the active set
    if viol <= tol and np.all(lam >= 0.0) and float(np.max(np.abs(lam * slack))) <= tol:
        pol = Projection(x, lam, max(viol, 0.0))
    else:
        w, _ = _ldp(-An, An @ p - bn, method="bvls")
        x = p + w
        pol = _polish(p, An, bn, x, tol * 10.0)
    if pol is None:
        viol = float(np.max(An @ x - bn))
        if viol > 1e-7:
            raise SolverError(f"projection did not converge (violation {viol:.3e})")
        pol = Projection(x, np.zeros(An.shape[0]), viol)
    mult = np.zeros(A.shape[0])
    mult[keep] = pol.multipliers / norms[keep]
    return Projection(pol.x, mult, pol.kkt_residual)
