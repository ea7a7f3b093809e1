import math

import numpy as np
import pytest

from lnckit import VPolytope
from lnckit.gallery import (
    UnknownEntryError,
    Verdict,
    build,
    example13_slice,
    expected_witness,
    helix_path,
    helix_points,
    identifiers,
)
from lnckit.lnc import lnc_search
from lnckit.sections import Section, probe_continuity

from oracles import lowest_height


def test_identifiers_sorted_and_buildable():
    ids = identifiers()
    assert ids == sorted(ids)
    for ident in ids:
        e = build(ident)
        assert e.identifier == ident
        assert e.T.cols == e.body.dim
        assert isinstance(e.verdict, Verdict)


def test_unknown_entry():
    with pytest.raises(UnknownEntryError) as info:
        build("nope")
    assert info.value.code == "UNKNOWN_ENTRY"


def test_helix_rejects_small_n():
    with pytest.raises(ValueError):
        build("helix10", N=7)


def test_helix_entry_shape():
    e = build("helix10", N=200)
    assert isinstance(e.body, VPolytope)
    assert e.body.vertices.shape == (200, 3)
    assert e.verdict is Verdict.LIMIT_FAMILY


@pytest.mark.parametrize("ident", ["cone9", "psd12", "prop11"])
def test_templates_verify(ident):
    w = expected_witness(ident)
    assert w.check(build(ident).body) == []
    assert w.form == "shift"


def test_psd_template_determinants():
    # the template points are [[t, s], [s, 1 - t]] with s^2 = t - t^2
    w = expected_witness("psd12")
    for q in w.approach:
        a, b, c = q
        assert a * c - b * b == pytest.approx(0.0, abs=1e-12)
        # the half shift toward 0 leaves the PSD cone: det = (t - 1) / 2 < 0
        h = np.asarray(q) - 0.5 * np.array([1.0, 0.0, 0.0])
        det = h[0] * h[2] - h[1] ** 2
        assert det == pytest.approx((a - 1.0) / 2.0, abs=1e-12)


def test_expected_witness_errors():
    with pytest.raises(ValueError):
        expected_witness("ball")
    with pytest.raises(UnknownEntryError):
        expected_witness("nope")


def test_example13_slice_witness():
    body = example13_slice()
    w = lnc_search(body, seed=1)
    assert w.found and w.check(body) == []


def test_epigraph_has_no_witness_flag():
    assert build("epigraph19").verdict is Verdict.LNC_NO_WITNESS
    assert not build("epigraph19").body.is_bounded


@pytest.mark.parametrize("n", [64, 128, 256])
def test_helix_jumps_against_lp_oracle(n):
    V = helix_points(n)
    body = VPolytope(V)
    e = build("helix10", N=n)
    path = helix_path(n)
    # heights are positive, so the min-norm section picks the lowest fiber point
    oracle = [np.array([*y, lowest_height(V, y)]) for y in path]
    ref = [np.linalg.norm(b - a) for a, b in zip(oracle, oracle[1:])]
    for method in ("min-norm", "gamma"):
        pr = probe_continuity(Section(body, e.T, method), path)
        # facets near angle 0 are almost vertical, so a point within the 1e-9
        # membership band can sit a few 1e-6 below the true lowest height
        np.testing.assert_allclose(pr.jumps, ref, atol=2e-5)
        assert max(body.violation(g) for g in pr.values) <= 1e-9
        assert pr.max_jump >= 6.0
        assert pr.max_jump <= 2 * math.pi + 1e-9


def test_helix_jump_nondecreasing():
    jumps = []
    for n in (64, 128, 256):
        e = build("helix10", N=n)
        jumps.append(probe_continuity(Section(e.body, e.T, "min-norm"), helix_path(n)).max_jump)
    assert jumps == sorted(jumps)


def test_helix_path_ends_at_one_zero():
    p = helix_path(128)
    np.testing.assert_array_equal(p[-1], [1.0, 0.0])
    angles = [math.atan2(q[1], q[0]) for q in p[:-1]]
    assert all(-0.5 - 1e-12 <= a < 0 for a in angles)
    assert angles == sorted(angles)
