import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial import ConvexHull

from lnckit.bodies import (
    AffineImage,
    Ball,
    BodyParseError,
    Ellipsoid,
    Epigraph19,
    HPolytope,
    Intersection,
    Membership,
    Product,
    PSDCap2,
    Suspension,
    Translate,
    VPolytope,
    Zonotope,
    dumps,
    line_extent,
    loads,
)
from lnckit.bodies.extent import NotInBodyError
from lnckit.bodies.polytopes import face_decompose_zonotope
from lnckit.gallery import random_hpolytope, random_vpolytope, random_zonotope

from conftest import cone, unit_square


def sample_inside(body, rng, count, box=None):
    lo, hi = box if box is not None else body.bounding_box()
    pts = []
    while len(pts) < count:
        X = rng.uniform(lo, hi, size=(4 * count, body.dim))
        pts.extend(x for x in X if body.contains(x))
    return np.array(pts[:count])


def bodies_for_probes():
    rng = np.random.default_rng(5)
    square = unit_square()
    return {
        "square": square,
        "ball": Ball([0.5, -0.2, 0.1], 1.3),
        "ellipsoid": Ellipsoid([0.0, 1.0], [[2.0, 0.5], [0.5, 1.0]]),
        "zonotope": random_zonotope(rng, 3, 5),
        "vpolytope": random_vpolytope(rng, 3, 8),
        "hpolytope": random_hpolytope(rng, 3, 9),
        "psd": PSDCap2(),
        "cone": cone(),
        "product": Product(square, Ball([0.0], 1.0)),
        "intersection": Intersection(random_hpolytope(rng, 3, 8), Ball(np.zeros(3), 0.9)),
        "translate": Translate(square, [2.0, -1.0]),
    }


# -- membership ------------------------------------------------------------------


def test_membership_examples(square):
    assert square.membership([0.5, 0.5]) is Membership.INSIDE
    Z = Zonotope([0.0, 0.0], [[1.0, 0.0], [0.0, 1.0]])
    assert Z.membership([1.5, 0.5]) is Membership.OUTSIDE
    # half-shift of the PSD curve at t = 1/2: determinant (t - 1)/2 = -1/4
    P = PSDCap2()
    assert P.membership([0.0, 0.5, 0.5]) is Membership.OUTSIDE
    assert P.determinant([0.0, 0.5, 0.5]) == pytest.approx(-0.25, abs=1e-15)


def test_membership_dimension_mismatch(square):
    with pytest.raises(ValueError):
        square.membership([0.5, 0.5, 0.5])


def test_membership_is_tolerance_band(square):
    assert square.contains([1.0 + 5e-10, 0.5])
    assert not square.contains([1.0 + 5e-9, 0.5])


@pytest.mark.parametrize("name", sorted(bodies_for_probes()))
def test_convexity_probe(name):
    body = bodies_for_probes()[name]
    rng = np.random.default_rng(1)
    X = sample_inside(body, rng, 1000)
    Y = sample_inside(body, rng, 1000)
    mids = 0.5 * (X + Y)
    assert np.all(body.violations(mids) <= 1e-9)


@pytest.mark.parametrize("name", sorted(bodies_for_probes()))
def test_support_dominates_inside_points(name):
    body = bodies_for_probes()[name]
    rng = np.random.default_rng(2)
    X = sample_inside(body, rng, 300)
    for _ in range(10):
        d = rng.standard_normal(body.dim)
        value, arg = body.support(d)
        assert np.all(X @ d <= value + 1e-9)
        if arg is not None:
            assert body.contains(arg, tol=1e-7)
            assert arg @ d == pytest.approx(value, abs=1e-7)


def test_vh_equivalence():
    rng = np.random.default_rng(3)
    for _ in range(10):
        V = rng.standard_normal((int(rng.integers(4, 9)), 3))
        P = VPolytope(V)
        hull = ConvexHull(V)
        H = HPolytope(hull.equations[:, :3], -hull.equations[:, 3])
        X = rng.uniform(V.min(0) - 0.2, V.max(0) + 0.2, size=(1000, 3))
        # skip points within round-off of a facet
        slack = X @ hull.equations[:, :3].T + hull.equations[:, 3]
        X = X[np.abs(slack).min(axis=1) > 1e-7]
        for x in X:
            assert P.contains(x) == H.contains(x) == P.contains_lp(x)


def test_zonotope_membership_matches_coefficient_lp():
    rng = np.random.default_rng(4)
    Z = random_zonotope(rng, 3, 5)
    lo, hi = Z.bounding_box()
    for x in rng.uniform(lo - 0.1, hi + 0.1, size=(300, 3)):
        if abs(Z.violation(x)) > 1e-7:
            assert Z.contains(x) == Z.contains_lp(x)


def test_psd_membership_matches_eigenvalues():
    rng = np.random.default_rng(6)
    P = PSDCap2()
    for a, b, c in rng.uniform(-0.2, 1.2, size=(2000, 3)):
        ev = np.linalg.eigvalsh([[a, b], [b, c]])
        if min(abs(ev[0]), abs(1 - ev[1])) > 1e-7:
            assert P.contains([a, b, c]) == (ev[0] >= 0 and ev[1] <= 1)


def test_suspension_matches_cone_hull_description():
    # hull of the rim (1 - cos t, sin t, 1) and the origin:
    # 0 <= z <= 1 and (x - z)^2 + y^2 <= z^2
    rng = np.random.default_rng(7)
    Q = cone()
    for x, y, z in rng.uniform([-0.2, -1.2, -0.2], [2.2, 1.2, 1.2], size=(1000, 3)):
        g = (x - z) ** 2 + y ** 2 - z * z
        if min(abs(g), abs(z), abs(1 - z)) < 1e-6:
            continue
        assert Q.contains([x, y, z]) == (0 <= z <= 1 and g <= 0)


def test_suspension_apex_slice():
    Q = Suspension(Ball([0.0, 0.0], 1.0))
    assert Q.contains([0.0, 0.0, 0.0])
    assert not Q.contains([1e-3, 0.0, 0.0])
    assert Q.contains([0.5, 0.0, 0.5])


def test_epigraph_membership_and_unboundedness():
    E = Epigraph19()
    assert E.contains([1.0, 0.0, 1.0])
    assert not E.contains([1.0, 0.0, 0.99])
    assert E.contains([0.0, 1.0, 0.0])
    assert E.contains([0.5, 0.5, 0.25 + 1e-12])
    assert not E.contains([0.5, 0.5, 0.24])
    assert not E.is_bounded
    assert not E.contains([0.6, 0.6, 5.0])


def test_product_membership_is_conjunction(rng):
    A, B = unit_square(), Ball([0.0], 1.0)
    P = Product(A, B)
    for x in rng.uniform(-1.5, 1.5, size=(500, 3)):
        assert P.contains(x) == (A.contains(x[:2]) and B.contains(x[2:]))


def test_affine_image_of_vpolytope_is_exact(rng):
    V = rng.standard_normal((8, 3))
    M = rng.standard_normal((2, 3))
    img = AffineImage(M, VPolytope(V))
    ref = ConvexHull(V @ M.T)
    for y in rng.uniform(-3, 3, size=(300, 2)):
        slack = ref.equations[:, :2] @ y + ref.equations[:, 2]
        if np.abs(slack).min() > 1e-7:
            assert img.contains(y) == bool(np.all(slack <= 0))


# -- nearest ---------------------------------------------------------------------


def test_nearest_examples(square):
    np.testing.assert_allclose(square.nearest([2.0, 0.5]), [1.0, 0.5], atol=1e-12)
    np.testing.assert_allclose(Ball([0.0, 0.0], 1.0).nearest([2.0, 0.0]), [1.0, 0.0], atol=1e-12)
    seg = VPolytope([[0.0, 0.0], [1.0, 1.0]])
    np.testing.assert_allclose(seg.nearest([1.0, 0.0]), [0.5, 0.5], atol=1e-9)


@pytest.mark.parametrize("name", sorted(bodies_for_probes()))
def test_nearest_variational_inequality(name):
    body = bodies_for_probes()[name]
    rng = np.random.default_rng(8)
    Z = sample_inside(body, rng, 200)
    lo, hi = body.bounding_box()
    for p in rng.uniform(lo - 1.0, hi + 1.0, size=(10, body.dim)):
        q = body.nearest(p)
        assert body.contains(q, tol=1e-7)
        assert np.all((Z - q) @ (p - q) <= 1e-6)
        np.testing.assert_allclose(body.nearest(q), q, atol=1e-8)


def test_nearest_matches_dense_sampling_on_ellipsoid(rng):
    E = Ellipsoid([0.0, 1.0], [[2.0, 0.5], [0.5, 1.0]])
    t = np.linspace(0, 2 * np.pi, 20001)
    L = np.linalg.cholesky(np.linalg.inv(E.M))
    rim = (L @ np.vstack([np.cos(t), np.sin(t)])).T + E.center
    for p in rng.uniform(-3, 3, size=(20, 2)):
        if E.contains(p):
            continue
        q = E.nearest(p)
        assert np.linalg.norm(q - p) <= np.linalg.norm(rim - p, axis=1).min() + 1e-6


# -- line extent -------------------------------------------------------------------


def test_line_extent_examples(square):
    ext = line_extent(square, [0.5, 0.5], [1.0, 0.0])
    assert ext.lo == pytest.approx(-0.5, abs=1e-9) and ext.hi == pytest.approx(0.5, abs=1e-9)
    ext = line_extent(cone(), [0.0, 0.0, 0.5], [0.0, 0.0, 1.0])
    assert ext.lo == pytest.approx(-0.5, abs=1e-9) and ext.hi == pytest.approx(0.5, abs=1e-9)
    ext = line_extent(Epigraph19(), [1.0, 0.0, 1.0], [0.0, 0.0, 1.0], cap=1000.0)
    # the endpoint sits inside the distance-like membership band
    assert ext.lo == pytest.approx(0.0, abs=1e-8)
    assert ext.hi == 1000.0 and ext.clipped_hi and not ext.clipped_lo


def test_line_extent_cone_axis_by_dense_sampling():
    Q = cone()
    zs = np.linspace(-0.5, 1.5, 20001)
    inside = [z for z in zs if Q.contains([0.0, 0.0, z])]
    assert min(inside) == pytest.approx(0.0, abs=1e-4)
    assert max(inside) == pytest.approx(1.0, abs=1e-4)


@pytest.mark.parametrize("name", ["ball", "psd", "cone", "zonotope", "intersection"])
def test_line_extent_endpoints_are_tight(name):
    body = bodies_for_probes()[name]
    rng = np.random.default_rng(9)
    for x in sample_inside(body, rng, 20):
        v = rng.standard_normal(body.dim)
        ext = line_extent(body, x, v)
        assert body.contains(x + ext.lo * v) and body.contains(x + ext.hi * v)
        step = 1e-6
        assert not body.contains(x + (ext.lo - step) * v)
        assert not body.contains(x + (ext.hi + step) * v)


def test_line_extent_rejects_outside_point(square):
    with pytest.raises(NotInBodyError):
        line_extent(square, [2.0, 0.5], [1.0, 0.0])


# -- zonotope face decomposition -----------------------------------------------------


def test_face_decompose_square_bottom_edge():
    Z = Zonotope([0.0, 0.0], [[1.0, 0.0], [0.0, 1.0]])
    A, B, w = face_decompose_zonotope(Z, [0.0, -1.0])
    np.testing.assert_allclose(A.G.T, [[1.0, 0.0]])
    np.testing.assert_allclose(B.G.T, [[0.0, 1.0]])
    np.testing.assert_allclose(w, [0.0, 0.0])


def test_face_decompose_square_vertex():
    Z = Zonotope([0.0, 0.0], [[1.0, 0.0], [0.0, 1.0]])
    A, B, w = face_decompose_zonotope(Z, [-1.0, -1.0])
    assert A.G.shape[1] == 0
    assert B.G.shape[1] == 2
    np.testing.assert_allclose(w, [0.0, 0.0])


def test_face_decompose_three_generators_by_brute_force():
    gens = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    Z = Zonotope([0.0, 0.0], gens)
    d = np.array([0.0, -1.0])
    A, B, w = face_decompose_zonotope(Z, d)
    np.testing.assert_allclose(A.G.T, [[1.0, 0.0]])
    # brute force over the 8 coefficient corners
    corners = np.array([[i, j, k] for i in (0, 1) for j in (0, 1) for k in (0, 1)], dtype=float) @ gens
    vals = corners @ d
    face = corners[np.isclose(vals, vals.max())]
    np.testing.assert_allclose(sorted(face[:, 0]), [0.0, 1.0])
    np.testing.assert_allclose(face[:, 1], 0.0)
    np.testing.assert_allclose(w, [0.0, 0.0])


@pytest.mark.parametrize("seed", range(3))
def test_face_decompose_minkowski_sum(seed):
    rng = np.random.default_rng(seed)
    G = rng.integers(-2, 3, size=(6, 3)).astype(float)
    G = G[np.linalg.norm(G, axis=1) > 0]
    Z = Zonotope(rng.standard_normal(3), G)
    d = np.cross(G[0], G[1])
    if np.linalg.norm(d) == 0:
        d = G[0]
    A, B, w = face_decompose_zonotope(Z, d)
    a = A.sample_points(rng, 500)
    b = B.sample_points(rng, 500)
    assert np.all(Z.violations(a + b) <= 1e-9)
    # a point of Z regroups into a generator sum from A plus one from B
    proj = G @ d
    flat = np.abs(proj) <= 1e-9 * np.linalg.norm(d) * np.linalg.norm(G, axis=1)
    t = rng.random((500, G.shape[0]))
    part_a = t[:, flat] @ G[flat]
    part_b = Z.center + t[:, ~flat] @ G[~flat]
    assert np.all(A.violations(part_a) <= 1e-9)
    assert np.all(B.violations(part_b) <= 1e-9)
    # A + w is the face exposed by d
    top = Z.support(d)[0]
    np.testing.assert_allclose((a + w) @ d, top, atol=1e-9)
    assert np.all(Z.violations(a + w) <= 1e-9)


def test_face_decompose_zero_direction():
    with pytest.raises(ValueError):
        face_decompose_zonotope(Zonotope([0.0], [[1.0]]), [0.0])


# -- io -------------------------------------------------------------------------------


def all_kinds():
    rng = np.random.default_rng(10)
    square = unit_square()
    return [
        square,
        VPolytope(rng.standard_normal((5, 3))),
        Ball([0.1, 0.2], 0.7),
        Ellipsoid([0.0, 1.0], [[2.0, 0.5], [0.5, 1.0]]),
        Zonotope(rng.standard_normal(2), rng.standard_normal((3, 2))),
        PSDCap2(),
        Epigraph19(),
        Intersection(square, Ball([0.5, 0.5], 0.6)),
        Product(square, Ball([0.0], 1.0)),
        AffineImage(rng.standard_normal((2, 3)), VPolytope(rng.standard_normal((5, 3)))),
        Translate(square, [1.0 / 3.0, 0.1]),
        Suspension(Ball([1.0, 0.0], 1.0)),
    ]


@pytest.mark.parametrize("body", all_kinds(), ids=lambda b: type(b).__name__)
def test_io_round_trip_is_bit_exact(body):
    text = dumps(body)
    again = loads(text)
    assert type(again) is type(body)
    assert dumps(again) == text


def test_io_rejects_malformed():
    for text in ['{"kind": "nope"}', "not json", '{"kind": "ball", "radius": 1}',
                 '{"kind": "hpolytope", "A": [[1, 0]], "b": [1, 2]}']:
        with pytest.raises(BodyParseError):
            loads(text)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, math.pi - 0.01))
def test_cone_rim_points_are_boundary(t):
    Q = cone()
    rim = np.array([1 - math.cos(t), math.sin(t), 1.0])
    outward = np.array([-math.cos(t), math.sin(t), 0.0])
    assert Q.contains(rim)
    assert not Q.contains(rim + 1e-6 * outward)
    assert Q.contains(rim - 1e-6 * outward)
