import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog
from scipy.spatial import ConvexHull

from lnckit import Ball, Epigraph19, LinearMap, VPolytope
from lnckit.solvers.fiber import EmptyFiberError, make_fiber, min_norm_over_fiber
from lnckit.solvers.outer import lexmin
from lnckit.solvers.qp import project_polyhedron
from lnckit.solvers.simplex import LPStatus, lp_minimize

from conftest import cone, proj_xy, unit_square
from oracles import grid_min_norm

SQUARE_A = np.vstack([np.eye(2), -np.eye(2)])
SQUARE_B = np.array([1.0, 1.0, 0.0, 0.0])


# -- lp_minimize -----------------------------------------------------------------


def test_lp_bottom_edge_of_square():
    res = lp_minimize([0.0, 1.0], SQUARE_A, SQUARE_B)
    assert res.status is LPStatus.OPTIMAL
    assert res.value == pytest.approx(0.0, abs=1e-12)
    assert res.x[1] == pytest.approx(0.0, abs=1e-12)
    assert 0.0 <= res.x[0] <= 1.0


def test_lp_unbounded_ray():
    res = lp_minimize([-1.0], [[-1.0]], [0.0])
    assert res.status is LPStatus.UNBOUNDED


def test_lp_infeasible():
    res = lp_minimize([1.0], [[1.0], [-1.0]], [0.0, -1.0])
    assert res.status is LPStatus.INFEASIBLE


def test_lp_equality_constraints():
    res = lp_minimize([1.0, 2.0], SQUARE_A, SQUARE_B, [[1.0, 1.0]], [1.5])
    assert res.optimal
    np.testing.assert_allclose(res.x, [1.0, 0.5], atol=1e-12)


def test_lp_epigraph_fiber_after_slicing():
    # fiber over x = 0.5, slice y at its minimum, then minimize z
    E = Epigraph19()
    T = LinearMap([[1.0, 0.0, 0.0]])
    fib = make_fiber(E, T, [0.5])
    objectives = [fib.N.T @ [0.0, 1.0, 0.0], fib.N.T @ [0.0, 0.0, 1.0]]
    res = lexmin(E, objectives, x0=fib.x0, N=fib.N, tol=fib.tol)
    np.testing.assert_allclose(res.x, [0.5, 0.0, 2.0], atol=1e-6)


def _random_lp(rng, n=3, m=8):
    A = rng.standard_normal((m, n))
    x_in = rng.standard_normal(n)
    b = A @ x_in + rng.uniform(0.1, 1.0, m)
    return A, b


@pytest.mark.parametrize("seed", range(20))
def test_lp_matches_scipy_and_duality(seed):
    rng = np.random.default_rng(seed)
    A, b = _random_lp(rng)
    # box it so the optimum exists
    A = np.vstack([A, np.eye(3), -np.eye(3)])
    b = np.concatenate([b, np.full(6, 5.0)])
    c = rng.standard_normal(3)
    res = lp_minimize(c, A, b)
    ref = linprog(c, A_ub=A, b_ub=b, bounds=[(None, None)] * 3, method="highs")
    assert res.optimal and ref.status == 0
    assert res.value == pytest.approx(ref.fun, abs=1e-7)
    assert np.all(A @ res.x <= b + 1e-8)
    assert c @ res.x == pytest.approx(res.value, abs=1e-8)
    # dual certificate from the final basis
    assert np.all(res.ineq_dual >= -1e-9)
    np.testing.assert_allclose(c + A.T @ res.ineq_dual, 0.0, atol=1e-8)
    assert res.value - (-b @ res.ineq_dual) <= 1e-7


def test_lp_matches_vertex_enumeration():
    rng = np.random.default_rng(11)
    for _ in range(100):
        V = rng.standard_normal((int(rng.integers(4, 11)), 3))
        hull = ConvexHull(V)
        A, b = hull.equations[:, :3], -hull.equations[:, 3]
        c = rng.standard_normal(3)
        res = lp_minimize(c, A, b)
        assert res.optimal
        assert res.value == pytest.approx(float((V @ c).min()), abs=1e-7)


def test_lp_is_deterministic():
    rng = np.random.default_rng(12)
    A, b = _random_lp(rng)
    A = np.vstack([A, np.eye(3), -np.eye(3)])
    b = np.concatenate([b, np.full(6, 5.0)])
    c = np.array([1.0, 0.0, 0.0])
    r1, r2 = lp_minimize(c, A, b), lp_minimize(c, A, b)
    assert r1.value == r2.value
    np.testing.assert_array_equal(r1.x, r2.x)


# -- projection -------------------------------------------------------------------


def test_project_polyhedron_matches_nearest_on_square(rng):
    for p in rng.uniform(-2, 3, size=(50, 2)):
        q = project_polyhedron(p, SQUARE_A, SQUARE_B).x
        np.testing.assert_allclose(q, np.clip(p, 0.0, 1.0), atol=1e-9)


# -- fibers ------------------------------------------------------------------------


def test_fiber_square_sum_map():
    fib = make_fiber(unit_square(), LinearMap([[1.0, 1.0]]), [1.5])
    assert fib.x0.sum() == pytest.approx(1.5, abs=1e-8)
    assert unit_square().contains(fib.x0)
    (n,) = fib.N.T
    assert abs(abs(n[0]) - 1 / math.sqrt(2)) < 1e-12 and abs(n[0] + n[1]) < 1e-12


def test_fiber_ball_vertical_chord():
    fib = make_fiber(Ball(np.zeros(3), 1.0), proj_xy(), [0.6, 0.0])
    np.testing.assert_allclose(fib.x0[:2], [0.6, 0.0], atol=1e-8)
    assert abs(fib.x0[2]) <= 0.8 + 1e-9


def test_fiber_cone_rim_is_a_point():
    y = [1 - math.cos(1.0), math.sin(1.0)]
    fib = make_fiber(cone(), proj_xy(), y)
    np.testing.assert_allclose(fib.x0, [y[0], y[1], 1.0], atol=1e-6)
    np.testing.assert_allclose(min_norm_over_fiber(fib), [y[0], y[1], 1.0], atol=1e-6)


def test_empty_fiber():
    with pytest.raises(EmptyFiberError):
        make_fiber(unit_square(), LinearMap([[1.0, 1.0]]), [2.5])
    with pytest.raises(EmptyFiberError):
        make_fiber(Ball(np.zeros(3), 1.0), proj_xy(), [0.9, 0.9])


@settings(max_examples=30, deadline=None)
@given(st.floats(-0.95, 0.95), st.floats(-0.95, 0.95))
def test_fiber_parametrization(a, b):
    if a * a + b * b > 0.95:
        return
    fib = make_fiber(Ball(np.zeros(4), 1.0), LinearMap(np.eye(4)[:2]), [a, b])
    rng = np.random.default_rng(0)
    S = rng.standard_normal((100, fib.k))
    X = fib.x0 + S @ fib.N.T
    np.testing.assert_allclose(X @ np.eye(4)[:2].T, np.tile([a, b], (100, 1)), atol=1e-8)


def test_boundary_target_resolves_as_feasible():
    # a target on the boundary of T(Q) relies on the looser fiber tolerance
    fib = make_fiber(Ball(np.zeros(3), 1.0), proj_xy(), [math.cos(0.3), math.sin(0.3)])
    assert fib.body.violation(fib.x0) <= 1e-7


# -- minimal-norm points --------------------------------------------------------------


def test_min_norm_examples():
    fib = make_fiber(Ball(np.zeros(3), 1.0), proj_xy(), [0.6, 0.0])
    np.testing.assert_allclose(min_norm_over_fiber(fib), [0.6, 0.0, 0.0], atol=1e-7)
    fib = make_fiber(unit_square(), LinearMap([[1.0, 1.0]]), [1.5])
    np.testing.assert_allclose(min_norm_over_fiber(fib), [0.75, 0.75], atol=1e-7)
    fib = make_fiber(Ball([2.0, 0.0, 0.0], 1.0), LinearMap([[1.0, 0.0, 0.0]]), [2.0])
    np.testing.assert_allclose(min_norm_over_fiber(fib), [2.0, 0.0, 0.0], atol=1e-7)


@pytest.mark.parametrize("case", ["ball", "polytope", "intersection"])
def test_min_norm_matches_grid_brute_force(case):
    from lnckit import Intersection
    from lnckit.gallery import random_hpolytope

    rng = np.random.default_rng(13)
    if case == "ball":
        body = Ball([0.3, 0.8, -0.4], 1.0)
    elif case == "polytope":
        body = random_hpolytope(rng, 3, 9)
    else:
        body = Intersection(random_hpolytope(rng, 3, 9), Ball([0.2, 0.0, 0.0], 0.9))
    T = LinearMap([[1.0, 0.5, -0.2]])
    for _ in range(3):
        x = body.nearest(rng.uniform(-0.3, 0.3, 3))
        y = T(x)
        fib = make_fiber(body, T, y)
        anchor = rng.uniform(-2, 2, 3)
        g = min_norm_over_fiber(fib, anchor)
        ref = grid_min_norm(body, fib, anchor)
        assert body.contains(g, tol=1e-7)
        np.testing.assert_allclose(T(g), y, atol=1e-7)
        # compare minimal distances; no grid point may beat the solver
        dist = float(np.linalg.norm(g - anchor))
        assert abs(dist - ref) <= 2e-3
        assert dist <= ref + 1e-9


def test_min_norm_variational_inequality(rng):
    body = VPolytope(rng.standard_normal((9, 3)))
    T = LinearMap([[1.0, 0.0, 0.0]])
    y = T(body.interior_point())
    fib = make_fiber(body, T, y)
    anchor = np.array([0.0, 3.0, -2.0])
    g = min_norm_over_fiber(fib, anchor)
    pts = [fib.point(s) for s in rng.uniform(-3, 3, size=(4000, 2))]
    pts = [p for p in pts if body.contains(p)]
    assert len(pts) > 50
    for z in pts:
        assert (anchor - g) @ (z - g) <= 1e-7


def test_min_norm_on_unbounded_epigraph_fiber():
    fib = make_fiber(Epigraph19(), LinearMap([[1.0, 0.0, 0.0]]), [0.5])
    g = min_norm_over_fiber(fib)
    assert Epigraph19().contains(g, tol=1e-7)
    assert g[0] == pytest.approx(0.5, abs=1e-8)
    # closest point of {(0.5, y, z): z >= 2 (1 - y)^3, 0 <= y <= 0.5}
    ys = np.linspace(0.0, 0.5, 50001)
    zs = 2 * (1 - ys) ** 3
    best = np.min(ys ** 2 + zs ** 2)
    assert g[1] ** 2 + g[2] ** 2 == pytest.approx(best, abs=1e-6)


@pytest.mark.parametrize("seed", range(30))
def test_project_polyhedron_kkt(seed):
    rng = np.random.default_rng([seed, 31])
    n = int(rng.integers(2, 6))
    A, b = _random_lp(rng, n=n, m=int(rng.integers(n + 1, 30)))
    p = 3.0 * rng.standard_normal(n)
    sol = project_polyhedron(p, A, b)
    slack = A @ sol.x - b
    lam = sol.multipliers
    # primal feasibility, dual feasibility, stationarity, complementarity
    assert np.all(slack <= 1e-9)
    assert np.all(lam >= 0.0)
    np.testing.assert_allclose(p - sol.x, A.T @ lam, atol=1e-8)
    assert np.max(np.abs(lam * slack)) <= 1e-8
    # and no vertex-free competitor does better: compare with scipy's SLSQP
    from scipy.optimize import minimize

    ref = minimize(lambda x: 0.5 * np.sum((x - p) ** 2), np.zeros(n) if np.all(b >= 0) else sol.x,
                   jac=lambda x: x - p, constraints=[{"type": "ineq", "fun": lambda x: b - A @ x,
                                                      "jac": lambda x: -A}], method="SLSQP",
                   options={"ftol": 1e-14, "maxiter": 500})
    assert np.linalg.norm(sol.x - p) <= np.linalg.norm(ref.x - p) + 1e-7
