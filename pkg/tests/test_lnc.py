import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lnckit import Ball, Ellipsoid, LinearMap, PSDCap2
from lnckit.gallery import build, random_hpolytope, random_map, random_vpolytope, random_zonotope
from lnckit.linalg import quotient_map
from lnckit.lnc import (
    LNCWitness,
    NoWitnessFound,
    eps_grid,
    lnc_search,
    lnc_verdict_crosscheck,
    make_witness,
    openness_probe,
    segment_margins,
    segment_test,
)

from conftest import cone, proj_xy, unit_square


# -- segment test -----------------------------------------------------------------------


def test_segment_test_examples(square):
    assert segment_test(square, [0.5, 0.5], [1.0, 0.0], [0.25])
    assert segment_test(square, [0.0, 0.5], [0.0, 1.0], [0.25])
    assert not segment_test(square, [0.0, 0.5], [1.0, 0.0], [0.25, 0.01])


def test_segment_test_rejects_zero_direction(square):
    with pytest.raises(ValueError):
        segment_test(square, [0.5, 0.5], [0.0, 0.0], [0.25])


def test_eps_grid_default():
    g = eps_grid()
    assert g == [2.0 ** -k for k in range(1, 13)]


def test_segment_margins_are_distances(square):
    m = segment_margins(square, [0.0, 0.5], [1.0, 0.0], [0.25])
    # q + v/4 is inside (margin <= 0), q - v/4 is 0.25 outside
    assert m[0][0] <= 0.0
    assert m[0][1] == pytest.approx(0.25, abs=1e-12)


def test_segment_test_monotone_in_eps():
    rng = np.random.default_rng(0)
    bodies = [unit_square(), Ball([0.0, 0.0, 0.0], 1.0), cone(), PSDCap2(),
              random_hpolytope(rng, 3, 8), random_zonotope(rng, 3, 5)]
    cases = 0
    while cases < 1000:
        body = bodies[cases % len(bodies)]
        lo, hi = body.bounding_box()
        q = body.nearest(rng.uniform(lo, hi))
        v = rng.standard_normal(body.dim)
        eps = rng.uniform(0.0, 1.0)
        if segment_test(body, q, v, [eps]):
            finer = sorted(rng.uniform(0.0, eps, 5)) + [eps]
            for e in finer:
                if e > 0:
                    assert segment_test(body, q, v, [e])
            assert segment_test(body, q, v, finer)
        cases += 1


# -- search -------------------------------------------------------------------------------


def test_search_unit_disk_clean():
    res = lnc_search(Ball([0.0, 0.0], 1.0), seed=1)
    assert isinstance(res, NoWitnessFound) and not res.found


def test_search_random_hpolytope_clean():
    P = random_hpolytope(np.random.default_rng(2), 3, 8)
    assert not lnc_search(P, seed=2).found


def test_search_cone_finds_verified_witness():
    Q = cone()
    w = lnc_search(Q, seed=1)
    assert isinstance(w, LNCWitness)
    assert w.check(Q) == []
    assert len(w.approach) == 3
    # segment-form records: base is the midpoint, grid is the default one
    np.testing.assert_allclose(w.base, w.midpoint, atol=1e-12)
    assert w.grid == eps_grid()


def test_cone_witness_stability():
    Q = cone()
    found = sum(lnc_search(Q, pairs=200, seed=s).found for s in range(1, 21))
    assert found >= 18


def test_witness_recheck_from_record_alone():
    Q = cone()
    w = lnc_search(Q, seed=3)
    again = LNCWitness.from_dict(json.loads(w.to_json()))
    assert again.check(Q) == []
    assert again.to_json() == w.to_json()
    data = json.loads(w.to_json())
    assert data["verdict"] == "NOT_LNC_WITNESS"
    assert data["seed"] == 3


def test_tampered_witness_is_rejected():
    Q = cone()
    data = json.loads(lnc_search(Q, seed=3).to_json())
    data["approach"][1] = data["approach"][0]
    assert LNCWitness.from_dict(data).check(Q)
    data = json.loads(lnc_search(Q, seed=3).to_json())
    data["margins"][0][0][0] += 1e-3
    assert "stored margins of point 0 do not match" in LNCWitness.from_dict(data).check(Q)


def test_interior_approach_is_not_a_witness():
    # points near the middle of the square lie inside every parallel segment
    w = make_witness(unit_square(), [0.0, 0.5], [1.0, 0.5], [[0.4, 0.5], [0.45, 0.52]], eps_grid())
    assert not w.verify(unit_square())


def test_search_is_deterministic():
    Q = cone()
    assert lnc_search(Q, seed=7).to_json() == lnc_search(Q, seed=7).to_json()
    P = random_vpolytope(np.random.default_rng(3), 3, 8)
    assert lnc_search(P, seed=7).to_dict() == lnc_search(P, seed=7).to_dict()


def test_search_counts_are_reported():
    res = lnc_search(Ball([0.0, 0.0], 1.0), pairs=40, seed=5)
    assert res.pairs == 40
    assert 0 <= res.degenerate <= res.pairs


def test_search_needs_bounded_body_or_box():
    from lnckit import Epigraph19

    with pytest.raises(ValueError):
        lnc_search(Epigraph19(), pairs=10, seed=1)


def test_example13_slice_has_witness():
    from lnckit.gallery import example13_slice

    body = example13_slice()
    w = lnc_search(body, seed=1)
    assert w.found and w.verify(body)


def test_polygon_suspension_clean():
    body = build("prop11", base="polygon").body
    for seed in range(1, 4):
        assert not lnc_search(body, seed=seed).found


def test_disk_suspension_witness():
    body = build("prop11").body
    w = lnc_search(body, seed=1)
    assert w.found and w.verify(body)


@pytest.mark.parametrize("seed", range(20))
def test_no_false_alarm_on_ellipsoids(seed):
    rng = np.random.default_rng([seed, 99])
    n = int(rng.integers(2, 5))
    A = rng.standard_normal((n, n))
    E = Ellipsoid(rng.standard_normal(n), A @ A.T + 0.3 * np.eye(n))
    assert not lnc_search(E, seed=seed).found


@pytest.mark.parametrize("seed", range(5))
def test_no_false_alarm_on_five_dimensional_polytopes(seed):
    rng = np.random.default_rng([seed, 98])
    assert not lnc_search(random_hpolytope(rng, 5, 12), seed=seed).found
    assert not lnc_search(random_vpolytope(rng, 5, 12), seed=seed).found


# -- openness -----------------------------------------------------------------------------


def test_openness_square_is_open():
    rep = openness_probe(unit_square(), LinearMap([[1.0, 0.0]]), [0.5, 0.5], 0.1)
    assert rep.verdict == "OPEN_AT"
    # fibers are vertical segments: distance is |y - 0.5|
    for y, d in zip(rep.targets, rep.distances):
        assert d == pytest.approx(abs(y[0] - 0.5), abs=1e-7)


def test_openness_cone_apex_is_not_open():
    rep = openness_probe(cone(), proj_xy(), [0.0, 0.0, 0.0], 0.4)
    assert rep.verdict == "NOT_OPEN_AT"
    assert rep.failing_target is not None
    assert all(m >= 0.4 for m in rep.decade_max)


def test_openness_ball_south_pole_is_open():
    rep = openness_probe(Ball(np.zeros(3), 1.0), proj_xy(), [0.0, 0.0, -1.0], 0.2)
    assert rep.verdict == "OPEN_AT"
    # chord endpoints: the lower end over y is at distance <= C sqrt(|y|)
    for y, d in zip(rep.targets, rep.distances):
        s = math.hypot(*y)
        ref = math.hypot(s, 1.0 - math.sqrt(max(0.0, 1.0 - s * s)))
        assert d <= ref + 1e-6


def test_openness_rejects_outside_base():
    with pytest.raises(ValueError):
        openness_probe(unit_square(), LinearMap([[1.0, 0.0]]), [2.0, 0.5], 0.1)


def test_openness_witness_quotient_map_not_open():
    Q = cone()
    w = lnc_search(Q, seed=2)
    Tv = quotient_map(w.v)
    r = 0.125 * np.linalg.norm(w.v)
    reps = [openness_probe(Q, Tv, pt, r, targets=60, seed=2, anchors=[w.midpoint]) for pt in (w.x_prime, w.x)]
    assert any(rep.verdict == "NOT_OPEN_AT" for rep in reps)


def test_openness_anchor_must_be_on_fiber():
    with pytest.raises(ValueError):
        openness_probe(unit_square(), LinearMap([[1.0, 0.0]]), [0.5, 0.5], 0.1, anchors=[[0.7, 0.5]])


# -- cross-check ------------------------------------------------------------------------


def test_crosscheck_vpolytope_consistent():
    rng = np.random.default_rng(4)
    rep = lnc_verdict_crosscheck(random_vpolytope(rng, 4, 10), random_map(rng, 2, 4))
    assert rep.consistent and rep.classification == "CLEAN"
    assert rep.image["verdict"] == "NO_WITNESS_FOUND"
    assert all(p["verdict"] == "OPEN_AT" for p in rep.probes)


def test_crosscheck_zonotope_consistent():
    rng = np.random.default_rng(5)
    rep = lnc_verdict_crosscheck(random_zonotope(rng, 4, 6), random_map(rng, 2, 4))
    assert rep.consistent and rep.classification == "CLEAN"


def test_crosscheck_cone_falsified():
    rep = lnc_verdict_crosscheck(cone(), proj_xy())
    assert rep.classification == "FALSIFIED" and rep.consistent
    assert rep.lnc["verdict"] == "NOT_LNC_WITNESS"
    assert any(p["verdict"] == "NOT_OPEN_AT" for p in rep.probes)


def test_crosscheck_unsupported_image_status():
    rep = lnc_verdict_crosscheck(PSDCap2(), LinearMap([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]))
    assert rep.image["verdict"] == "UNSUPPORTED_IMAGE"


def test_crosscheck_ellipsoid_image_is_searched():
    rep = lnc_verdict_crosscheck(Ball(np.zeros(3), 1.0), proj_xy())
    assert rep.image["verdict"] == "NO_WITNESS_FOUND"
    assert rep.classification == "CLEAN"


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.01, 1.0))
def test_segment_test_on_square_matches_closed_form(a, b, eps):
    q = [a, b]
    inside = a - eps >= -1e-9 and a + eps <= 1 + 1e-9
    assert segment_test(unit_square(), q, [1.0, 0.0], [eps]) == inside
