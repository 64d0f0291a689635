import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from revgeom.comparison import (ComparisonRecord, ComparisonReport, ModelTestSpace, RoundSphere,
                                TriangleSides, check_angle_comparison, check_domination, compare,
                                comparison_triangle, meridian_jacobi, perimeter_check,
                                perimeter_suite, pole_distance_identity, rigidity_isometry_check,
                                separation_is_monotone, verify_lemma_suite)
from revgeom.distances import dist
from revgeom.errors import HypothesisViolated, InvalidParameter, NoComparisonTriangle
from revgeom.geodesics import SurfacePoint as P
from revgeom.nmodel import nmodel_triangle_sample
from revgeom.profiles import make_sphere_profile


def test_sides_validation():
    with pytest.raises(InvalidParameter):
        TriangleSides(1.0, 0.0, 1.0)
    assert TriangleSides(1, 1, 3).triangle_defect() == pytest.approx(1.0)
    assert TriangleSides(1, 1, 1).triangle_defect() < 0


def test_degenerate_pencil(ellipsoid):
    cfg = comparison_triangle(ellipsoid, TriangleSides(1.5, 1.5, 1e-6))
    assert cfg.realized.d_xy <= 2e-6
    assert cfg.delta_theta < 1e-5


def test_octant(sphere):
    h = math.pi / 2
    cfg = comparison_triangle(sphere, TriangleSides(h, h, h))
    assert cfg.delta_theta == pytest.approx(h, abs=1e-8)
    assert cfg.angles == pytest.approx((h, h, h), abs=1e-7)


def test_recover_separation(ellipsoid_pi):
    s = dist(ellipsoid_pi, P(math.pi / 3, 0.0), P(math.pi / 3, math.pi / 2))
    cfg = comparison_triangle(ellipsoid_pi, TriangleSides(math.pi / 3, math.pi / 3, s))
    assert cfg.delta_theta == pytest.approx(math.pi / 2, abs=1e-6)
    assert cfg.side_defect <= 1e-6
    assert cfg.vertices[2].theta == cfg.delta_theta


def test_infeasible(ellipsoid):
    with pytest.raises(NoComparisonTriangle) as exc:
        comparison_triangle(ellipsoid, TriangleSides(1.0, 1.0, 3.5))
    assert exc.value.args
    with pytest.raises(NoComparisonTriangle):
        comparison_triangle(ellipsoid, TriangleSides(9.0, 1.0, 8.5))


def test_monotone_separation(ellipsoid):
    assert separation_is_monotone(ellipsoid)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(0.02, math.pi - 0.02))
def test_realisation_and_pole_angle(exotic_pi, f1, f2, dth):
    a, b = f1 * math.pi, f2 * math.pi
    c = dist(exotic_pi, P(a, 0.0), P(b, dth))
    cfg = comparison_triangle(exotic_pi, TriangleSides(a, b, c))
    assert cfg.side_defect <= 1e-6
    assert abs(cfg.angles[0] - cfg.delta_theta) <= 1e-8
    assert all(0.0 <= x <= math.pi for x in cfg.angles)


# -- angle comparison ---------------------------------------------------------------

def test_equality_case_surface(ellipsoid):
    rep = compare(ModelTestSpace(ellipsoid, 2), ellipsoid, samples=5, seed=1)
    assert rep.passed
    assert max(abs(m) for r in rep.records for m in r.margins) <= 1e-5


def test_round_sphere_four_dominates_ellipsoid(ellipsoid):
    gap = check_domination(RoundSphere(4.0), ellipsoid)
    assert gap >= -1e-9
    rep = compare(RoundSphere(4.0), ellipsoid, samples=8, seed=2)
    assert rep.passed and rep.min_margin >= -1e-5


def test_spheres_hinge_comparison(sphere):
    quarter = make_sphere_profile(0.25)
    h = math.pi / 2
    tri = RoundSphere(1.0).triangle(h, h, h)
    assert tri.angles == pytest.approx((h, h, h), abs=1e-12)
    rec = check_angle_comparison(RoundSphere(1.0), quarter, tri)
    # closed-form angle of the equilateral triangle of side pi/2 at curvature 1/4
    k = 0.5
    c = math.cos(k * h)
    model_angle = math.acos((c - c * c) / (math.sin(k * h) ** 2))
    assert rec.model_angles[1] == pytest.approx(model_angle, abs=1e-6)
    assert rec.passed and min(rec.margins) > 0


def test_hypothesis_violation(ellipsoid):
    with pytest.raises(HypothesisViolated):
        check_domination(RoundSphere(1.0), ellipsoid)
    with pytest.raises(HypothesisViolated):
        compare(RoundSphere(1.0), ellipsoid, samples=1)


def test_equality_case_n3(ellipsoid):
    space = ModelTestSpace(ellipsoid, 3)
    tri = nmodel_triangle_sample(ellipsoid, 3, 5)
    rec = check_angle_comparison(space, ellipsoid, tri)
    assert max(abs(m) for m in rec.margins) <= 1e-5 and rec.side_defect <= 1e-6


def test_report_serialises(ellipsoid):
    rep = compare(RoundSphere(4.0), ellipsoid, samples=2, seed=3)
    d = json.loads(rep.to_json())
    assert d["seed"] == 3 and d["schema"].startswith("revgeom.comparison-report")
    assert len(d["records"]) == 2


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(-1e-3, 1e-3), st.floats(-1e-3, 1e-3), st.floats(-1e-3, 1e-3)),
                min_size=1, max_size=8))
def test_report_counterexample_invariant(margins):
    tol = 1e-5
    rep = ComparisonReport(seed=0)
    for m in margins:
        rep.add(ComparisonRecord((1, 1, 1), (0, 0, 0), (0, 0, 0), m, 0.0, 0.0, min(m) >= -tol))
    assert (not rep.counterexamples) == all(min(m) >= -tol for m in margins)


# -- perimeter and suite ------------------------------------------------------------

def test_perimeter_equality_through_poles(ellipsoid):
    L = ellipsoid.length
    x = 1.7
    margin = perimeter_check(ellipsoid, TriangleSides(x, L, dist(ellipsoid, P(x, 0.3), P(L))))
    assert abs(margin) <= 1e-12


def test_perimeter_octant(sphere):
    h = math.pi / 2
    assert perimeter_check(sphere, TriangleSides(h, h, h)) == pytest.approx(math.pi / 2)


def test_perimeter_suite_small(ellipsoid_pi, exotic_pi):
    for model in (ellipsoid_pi, exotic_pi):
        res = perimeter_suite(model, 100, 7)
        assert res["passed"] and res["min_margin"] >= -1e-7


def test_pole_identity_and_jacobi(ellipsoid_pi):
    for r in (0.3, 1.5, 2.9):
        assert abs(pole_distance_identity(ellipsoid_pi, P(r, 1.0))) <= 1e-7
    err_t, rel = meridian_jacobi(ellipsoid_pi)
    assert err_t <= 1e-8 and rel <= 1e-8


def test_suite_requires_rescaled(ellipsoid):
    with pytest.raises(InvalidParameter):
        verify_lemma_suite(ellipsoid, 10)


@pytest.mark.slow
def test_suite_on_sphere(sphere):
    rep = verify_lemma_suite(sphere, samples=20, seed=1, cut_points=2, cut_grid=9)
    assert rep.passed, rep.failed_checks
    assert set(rep.checks["c"]["kinds"]) == {"single-point"}


@pytest.mark.slow
def test_suite_on_exotic(exotic_pi):
    rep = verify_lemma_suite(exotic_pi, samples=30, seed=2, cut_points=2, cut_grid=9)
    assert rep.passed, rep.failed_checks
    assert set(rep.checks["c"]["kinds"]) == {"meridian-subarc"}


def test_suite_reports_failure(monkeypatch, ellipsoid_pi):
    import revgeom.comparison as C

    monkeypatch.setattr(C, "meridian_jacobi", lambda model: (1.0, 0.0))
    monkeypatch.setattr(C, "perimeter_suite", lambda *a: {"name": C.CHECK_NAMES["a"],
                                                          "passed": True})
    monkeypatch.setattr(C, "cut_locus", lambda *a, **k: type("R", (), {
        "max_theta_deviation": 0.0, "kind": "meridian-subarc"})())
    rep = C.verify_lemma_suite(ellipsoid_pi, samples=3, seed=0, cut_points=1,
                               diameter_samples=3, identity_samples=2)
    assert not rep.passed
    assert rep.failed_checks == [C.CHECK_NAMES["e"]]


# -- rigidity -----------------------------------------------------------------------

def test_rigidity_identity_n2(ellipsoid):
    res = rigidity_isometry_check(ellipsoid, n=2, pairs=10, isometry="identity")
    assert res["max_defect"] == 0.0 and res["passed"]


def test_rigidity_reflection_n2(ellipsoid):
    res = rigidity_isometry_check(ellipsoid, n=2, pairs=20, isometry="reflection")
    assert res["max_defect"] <= 1e-8


def test_rigidity_rejects_non_orthogonal(ellipsoid):
    with pytest.raises(InvalidParameter):
        rigidity_isometry_check(ellipsoid, n=2, pairs=1, isometry=np.array([[2.0, 0], [0, 1]]))
