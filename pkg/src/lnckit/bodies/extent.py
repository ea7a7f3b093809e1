"""Extent of a body along a line: ``{b : x + b v in Q}``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import Body


class NotInBodyError(ValueError):
    """The base point of a line query is OUTSIDE the body."""


@dataclass(frozen=True)
class Extent:
    lo: float
    hi: float
    clipped_lo: bool = False
    clipped_hi: bool = False

    @property
    def clipped(self) -> bool:
        return self.clipped_lo or self.clipped_hi

    def contains(self, b: float) -> bool:
        return self.lo <= b <= self.hi


def _ratio_test(h, x, v, cap):
    lo, hi = -cap, cap
    cl, ch = True, True
    if h.f.size:
        ev = h.E @ v
        if np.max(np.abs(ev)) > 1e-12 * (1.0 + np.linalg.norm(v)):
            return Extent(0.0, 0.0)
    if h.b.size:
        av = h.A @ v
        slack = h.b - h.A @ x
        pos = av > 1e-15
        neg = av < -1e-15
        if np.any(pos):
            r = float(np.min(slack[pos] / av[pos]))
            if r < hi:
                hi, ch = r, False
        if np.any(neg):
            r = float(np.max(slack[neg] / av[neg]))
            if r > lo:
                lo, cl = r, False
    # a base point inside only within tolerance can give a tiny inverted interval
    lo, hi = min(lo, 0.0), max(hi, 0.0)
    return Extent(lo, hi, cl, ch)


def _one_side(body, x, v, sign, cap, tol, iters):
    def inside(b):
        return body.violation(x + sign * b * v) <= tol

    if inside(cap):
        return cap, True
    a, b = 0.0, min(1e-3, cap)
    while inside(b):
        a, b = b, min(2.0 * b, cap)
    for _ in range(iters):
        m = 0.5 * (a + b)
        if inside(m):
            a = m
        else:
            b = m
    return a, False


def line_extent(body: Body, x, v, cap: float = 1e3, tol: float = 1e-9, iters: int = 100) -> Extent:
    """Closed interval of ``b`` with ``x + b v`` INSIDE, clipped to ``[-cap, cap]``.

    Polyhedral bodies use an exact ratio test; others bracket exponentially
    and bisect on the membership crossing at ``tol``.
    """
    x = body._check(x, "point")
    v = body._check(v, "direction")
    if not np.any(v):
        raise ValueError("direction must be nonzero")
    if body.violation(x) > tol:
        raise NotInBodyError("base point is OUTSIDE the body")
    h = body.hform()
    if h is not None:
        return _ratio_test(h, x, v, cap)
    hi, ch = _one_side(body, x, v, 1.0, cap, tol, iters)
    lo, cl = _one_side(body, x, v, -1.0, cap, tol, iters)
    return Extent(-lo, hi, cl, ch)
