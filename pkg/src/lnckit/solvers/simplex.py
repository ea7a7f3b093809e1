"""Two-phase dense tableau simplex with Bland's anti-cycling rule.

Problems are posed as::

    minimize    c @ x
    subject to  A_ub @ x <= b_ub
                A_eq @ x == b_eq

with free variables unless ``nonneg`` marks some of them. Sizes in this
toolkit are tiny, so the tableau is dense and rebuilt from scratch per call.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class SolverError(RuntimeError):
    """Raised when an iterative kernel stalls or exceeds its iteration budget."""


class LPStatus(str, enum.Enum):
    OPTIMAL = "OPTIMAL"
    UNBOUNDED = "UNBOUNDED"
    INFEASIBLE = "INFEASIBLE"


@dataclass
class LPResult:
    status: LPStatus
    value: float
    x: np.ndarray | None
    ineq_dual: np.ndarray = field(default_factory=lambda: np.zeros(0))
    eq_dual: np.ndarray = field(default_factory=lambda: np.zeros(0))
    pivots: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is LPStatus.OPTIMAL


def _pivot(tab: np.ndarray, row: int, col: int) -> None:
    tab[row] /= tab[row, col]
    colv = tab[:, col].copy()
    colv[row] = 0.0
    tab -= np.outer(colv, tab[row])


def _bland_loop(tab, basis, m, cost_row, allowed, tol, budget, counter):
    """Run primal simplex on ``tab`` until optimal or unbounded.

    Rows ``0..m-1`` are constraints, ``cost_row`` holds the reduced costs being
    minimized and the last column is the right-hand side. Every row (including
    any other cost row) is updated on a pivot.
    Returns True when optimal, False when unbounded.
    """
    while True:
        red = tab[cost_row, :-1]
        cand = np.nonzero((red < -tol) & allowed)[0]
        if cand.size == 0:
            return True
        col = int(cand[0])
        colv = tab[:m, col]
        pos = colv > tol
        if not np.any(pos):
            return False
        ratios = np.full(m, np.inf)
        ratios[pos] = tab[:m, -1][pos] / colv[pos]
        best = ratios.min()
        ties = np.nonzero(ratios <= best + tol * max(1.0, abs(best)))[0]
        row = int(min(ties, key=lambda i: basis[i]))
        _pivot(tab, row, col)
        basis[row] = col
        counter[0] += 1
        if counter[0] > budget:
            raise SolverError(f"simplex exceeded {budget} pivots")


def lp_minimize(
    c,
    A_ub=None,
    b_ub=None,
    A_eq=None,
    b_eq=None,
    nonneg=None,
    tol: float = 1e-10,
    max_pivots: int = 50000,
) -> LPResult:
    """Minimize a linear objective over a polyhedron; see module docstring.

    INFEASIBLE and UNBOUNDED are reported through ``status``. When optimal, the
    multipliers ``ineq_dual >= 0`` and ``eq_dual`` satisfy
    ``c + A_ub.T @ ineq_dual - A_eq.T @ eq_dual = 0`` up to round-off, so
    ``-b_ub @ ineq_dual + b_eq @ eq_dual`` is a certified lower bound.
    """
    c = np.asarray(c, dtype=float).ravel()
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=float)).reshape(-1, n)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.zeros((0, n)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=float)).reshape(-1, n)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    if A_ub.shape[0] != b_ub.size or A_eq.shape[0] != b_eq.size:
        raise ValueError("constraint matrix / right-hand side size mismatch")
    nonneg = np.zeros(n, dtype=bool) if nonneg is None else np.asarray(nonneg, dtype=bool)

    # Column layout: x+ (or x) for each variable, then x- for free ones, then slacks.
    free = np.nonzero(~nonneg)[0]
    n_split = n + free.size
    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq

    def expand(a):
        return np.hstack([a, -a[:, free]])

    A_std = np.zeros((m, n_split + m_ub))
    A_std[:m_ub, :n_split] = expand(A_ub)
    A_std[:m_ub, n_split:] = np.eye(m_ub)
    A_std[m_ub:, :n_split] = expand(A_eq)
    b_std = np.concatenate([b_ub, b_eq])
    c_std = np.concatenate([c, -c[free], np.zeros(m_ub)])

    sign = np.where(b_std < 0, -1.0, 1.0)
    A_std *= sign[:, None]
    b_std = b_std * sign
    ncol = A_std.shape[1]

    # Rows whose slack enters with +1 can start basic; the rest get artificials.
    basis = [-1] * m
    for i in range(m_ub):
        if sign[i] > 0:
            basis[i] = n_split + i
    art_rows = [i for i in range(m) if basis[i] < 0]
    n_art = len(art_rows)
    total = ncol + n_art

    tab = np.zeros((m + 2, total + 1))
    tab[:m, :ncol] = A_std
    tab[:m, -1] = b_std
    for k, i in enumerate(art_rows):
        tab[i, ncol + k] = 1.0
        basis[i] = ncol + k
    tab[m, :ncol] = c_std  # phase-2 cost row, carried along
    # phase-1 cost: sum of artificials, priced out
    for i in art_rows:
        tab[m + 1] -= tab[i]
    tab[m + 1, ncol:ncol + n_art] = 0.0

    counter = [0]
    scale = max(1.0, float(np.abs(b_std).max(initial=0.0)))
    allowed = np.ones(total, dtype=bool)

    if n_art:
        _bland_loop(tab, basis, m, m + 1, allowed, tol, max_pivots, counter)
        infeas = -tab[m + 1, -1]
        if infeas > 1e-9 * scale:
            return LPResult(LPStatus.INFEASIBLE, float("nan"), None, pivots=counter[0])
        # drive artificials out of the basis
        keep = np.ones(m, dtype=bool)
        for i in range(m):
            if basis[i] >= ncol:
                row = tab[i, :ncol]
                cand = np.nonzero(np.abs(row) > 1e-9)[0]
                if cand.size:
                    _pivot(tab, i, int(cand[0]))
                    basis[i] = int(cand[0])
                else:
                    keep[i] = False
        allowed[ncol:] = False
    else:
        keep = np.ones(m, dtype=bool)

    # price out the phase-2 cost row
    for i in range(m):
        if keep[i] and tab[m, basis[i]] != 0.0:
            tab[m] -= tab[m, basis[i]] * tab[i]
    rows = np.nonzero(keep)[0]
    sub = np.vstack([tab[rows], tab[m]])
    sub_basis = [basis[i] for i in rows]
    bounded = _bland_loop(sub, sub_basis, rows.size, rows.size, allowed, tol, max_pivots, counter)
    if not bounded:
        return LPResult(LPStatus.UNBOUNDED, float("-inf"), None, pivots=counter[0])

    # Recover the basic solution from the original data for accuracy.
    z = np.zeros(total)
    B = A_std[rows][:, sub_basis] if all(j < ncol for j in sub_basis) else None
    if B is not None and B.shape[0] == B.shape[1]:
        try:
            zb = np.linalg.solve(B, b_std[rows])
            y_sub = np.linalg.solve(B.T, c_std[sub_basis])
        except np.linalg.LinAlgError:
            zb = sub[:-1, -1]
            y_sub = None
    else:
        zb = sub[:-1, -1]
        y_sub = None
    for j, val in zip(sub_basis, zb):
        z[j] = val
    x = z[:n].copy()
    x[free] -= z[n:n_split]
    y = np.zeros(m)
    if y_sub is not None:
        y[rows] = y_sub
    ineq_dual = -sign[:m_ub] * y[:m_ub]
    eq_dual = sign[m_ub:] * y[m_ub:]
    return LPResult(LPStatus.OPTIMAL, float(c @ x), x, ineq_dual, eq_dual, counter[0])
