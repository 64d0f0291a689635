import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import spheroid
from revgeom.errors import (InvalidParameter, NotProlate, OutOfDomain, ResolutionError,
                            ValidationFailure)
from revgeom.profiles import (gaussian_curvature, load_surface, make_ellipsoid_profile,
                              make_sphere_profile, make_table_profile, model_from_dict,
                              radial_curvature_function, rescale_model, sample_radii,
                              surface_to_dict, validate_model)

ELL_L = spheroid.pole_distance(1.0, 2.0)


# -- sphere -------------------------------------------------------------------------

@pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
def test_unit_sphere_curvature(sphere, r):
    assert gaussian_curvature(sphere, r) == pytest.approx(1.0, abs=1e-12)


def test_unit_sphere_pole_distance(sphere):
    assert sphere.length == pytest.approx(math.pi, abs=1e-15)


def test_sphere_h4():
    s = make_sphere_profile(4.0)
    assert s.length == pytest.approx(math.pi / 2, abs=1e-15)
    assert float(s.m(math.pi / 4)) == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("H", [0.0, -1.0, math.nan])
def test_sphere_rejects_nonpositive(H):
    with pytest.raises(InvalidParameter):
        make_sphere_profile(H)


# -- ellipsoid ----------------------------------------------------------------------

def test_ellipsoid_pole_distance(ellipsoid):
    assert ellipsoid.length == pytest.approx(ELL_L, abs=1e-12)
    assert ellipsoid.length == pytest.approx(4.84422, abs=5e-6)


def test_ellipsoid_pole_and_equator_curvature(ellipsoid):
    assert gaussian_curvature(ellipsoid, 0.0) == pytest.approx(spheroid.curvature(0.0, 1, 2), abs=1e-6)
    assert gaussian_curvature(ellipsoid, ellipsoid.length / 2) == pytest.approx(
        spheroid.curvature(math.pi / 2, 1, 2), abs=1e-10)
    assert gaussian_curvature(ellipsoid, ellipsoid.length / 2) == pytest.approx(0.25, abs=1e-10)


def test_nearly_round_ellipsoid():
    m = make_ellipsoid_profile(1.0, 1.0 + 1e-6)
    r = np.linspace(0, m.length, 2001)
    G = radial_curvature_function(m)(r)
    assert np.max(np.abs(G - 1.0)) <= 1e-4


def test_not_prolate():
    with pytest.raises(NotProlate):
        make_ellipsoid_profile(2.0, 1.0)
    with pytest.raises(NotProlate):
        make_ellipsoid_profile(1.0, 1.0)


def test_coarse_grid_is_resolution_error():
    with pytest.raises(ResolutionError):
        make_ellipsoid_profile(1.0, 2.0, grid=16)


def test_spline_matches_parametrisation(ellipsoid):
    rng = np.random.default_rng(3)
    r = rng.uniform(0, ellipsoid.length, 1000)
    ref = np.array([math.sin(spheroid.u_of_r(x, 1, 2)) for x in r])
    assert np.max(np.abs(ellipsoid.m(r) - ref)) <= 1e-8


def test_ellipsoid_curvature_against_closed_form(ellipsoid):
    rng = np.random.default_rng(4)
    r = rng.uniform(0.0, ellipsoid.length, 100)
    G = radial_curvature_function(ellipsoid)(r)
    ref = np.array([spheroid.curvature_at_r(x, 1, 2) for x in r])
    assert np.max(np.abs(G - ref)) <= 1e-6


# -- exotic -------------------------------------------------------------------------

def test_exotic_equator(exotic):
    eq = 3 * math.sqrt(3) * math.pi / 2
    assert exotic.length == pytest.approx(2 * eq, abs=1e-13)
    assert gaussian_curvature(exotic, eq) == pytest.approx(-1.0, abs=1e-9)
    assert float(radial_curvature_function(exotic)(np.array([eq]))[0]) == pytest.approx(-1.0, abs=1e-9)
    assert float(exotic.m(eq)) == pytest.approx(math.sqrt(3) / 5, abs=1e-14)


def test_exotic_pole_slope(exotic):
    assert float(exotic.profile.deriv1(0.0)) == pytest.approx(1.0, abs=1e-14)


def test_exotic_validation(exotic):
    rep = validate_model(exotic)
    assert rep.monotone_on_half and rep.trend == "decreasing"
    assert rep.min_G < 0 and exotic.monotone_G


# -- validation ---------------------------------------------------------------------

def test_sphere_validation_is_constant(sphere):
    rep = validate_model(sphere)
    # sin(pi - r) vs sin(r) differ by one rounding of pi - r
    assert rep.symmetry_defect <= 1e-15
    assert rep.monotone_on_half and rep.trend == "constant"


def test_ellipsoid_validation(ellipsoid):
    rep = validate_model(ellipsoid)
    assert rep.monotone_on_half and ellipsoid.monotone_G
    assert rep.max_G == pytest.approx(4.0, abs=1e-6)
    json.loads(rep.to_json())


def _bumpy_table(n=4097):
    r = np.linspace(0, math.pi, n)
    m = np.sin(r) * (1 + 0.2 * np.sin(r) ** 2)
    m[-1] = 0.0
    return r, m


def test_non_monotone_profile_fails_validation():
    r, m = _bumpy_table()
    model = make_table_profile(r, m, validate=False)
    with pytest.raises(ValidationFailure) as exc:
        validate_model(model)
    assert "curvature" in str(exc.value)
    assert not validate_model(model, strict=False).monotone_on_half


def test_sphere_table_curvature():
    r = np.linspace(0, math.pi, 4097)
    m = np.sin(r)
    m[-1] = 0.0
    # spline noise in m'' is far above the monotonicity slack, so only closeness is asserted
    rep = validate_model(make_table_profile(r, m, validate=False), strict=False)
    assert rep.symmetry_defect <= 1e-12
    assert max(abs(rep.min_G - 1), abs(rep.max_G - 1)) <= 1e-4


def test_asymmetric_profile_fails():
    r = np.linspace(0, math.pi, 2049)
    m = np.sin(r) * (1 + 0.1 * np.sin(r) * np.cos(r))
    m[-1] = 0.0
    with pytest.raises(ValidationFailure) as exc:
        make_table_profile(r, m)
    assert "symmetry" in str(exc.value) or "pole closure" in str(exc.value)


def test_curvature_out_of_domain(ellipsoid):
    with pytest.raises(OutOfDomain):
        gaussian_curvature(ellipsoid, -0.1)
    with pytest.raises(OutOfDomain):
        gaussian_curvature(ellipsoid, ellipsoid.length + 0.1)


# -- rescaling ----------------------------------------------------------------------

def test_rescale_sphere():
    s = rescale_model(make_sphere_profile(4.0))
    assert s.length == pytest.approx(math.pi, abs=1e-15)
    assert gaussian_curvature(s, 1.0) == pytest.approx(1.0, abs=1e-12)
    assert s.scale == pytest.approx(2.0)


def test_rescale_ellipsoid(ellipsoid_pi):
    assert ellipsoid_pi.length == pytest.approx(math.pi, abs=1e-15)
    lam = math.pi / ELL_L
    assert gaussian_curvature(ellipsoid_pi, 0.0) == pytest.approx(4.0 / lam ** 2, rel=1e-6)
    assert gaussian_curvature(ellipsoid_pi, math.pi / 2) == pytest.approx(0.25 / lam ** 2, rel=1e-9)


def test_rescale_idempotent(ellipsoid_pi):
    again = rescale_model(ellipsoid_pi)
    assert again is ellipsoid_pi
    assert again.length == math.pi


# -- definitions --------------------------------------------------------------------

@pytest.mark.parametrize("spec", ["sphere:1", "sphere:2.5", "ellipsoid:1,2", "exotic"])
def test_round_trip(spec):
    m = load_surface(spec)
    m2 = model_from_dict(surface_to_dict(m))
    r = np.linspace(0, m.length, 101)
    assert m2.length == m.length
    assert np.array_equal(m2.m(r), m.m(r))


def test_definition_file(tmp_path):
    r, m = np.linspace(0, math.pi, 1025), None
    m = np.sin(r)
    m[-1] = 0.0
    p = tmp_path / "surf.json"
    p.write_text(json.dumps({"name": "tab", "kind": "table",
                             "samples": np.stack([r, m], 1).tolist(), "rescale": True}))
    model = load_surface(str(p))
    assert model.name.startswith("tab") and model.length == pytest.approx(math.pi)
    q = tmp_path / "ell.json"
    q.write_text(json.dumps({"kind": "ellipsoid", "params": {"a_eq": 1, "b_polar": 2}}))
    assert load_surface(str(q)).length == pytest.approx(ELL_L, abs=1e-12)


@pytest.mark.parametrize("bad", ["torus:1", "ellipsoid:1", "sphere:-1"])
def test_bad_builtin(bad):
    with pytest.raises(InvalidParameter):
        load_surface(bad)


# -- invariants ---------------------------------------------------------------------

@pytest.mark.parametrize("name", ["sphere", "ellipsoid", "exotic", "ellipsoid_pi", "exotic_pi"])
def test_profile_symmetry(request, name):
    model = request.getfixturevalue(name)
    r = np.linspace(0, model.length, 10_000)
    m = model.m(r)
    assert np.all(np.abs(model.m(model.length - r) - m) <= 1e-8 * (1 + m))


@pytest.mark.parametrize("name", ["sphere", "ellipsoid", "exotic"])
def test_curvature_symmetry(request, name):
    model = request.getfixturevalue(name)
    G = radial_curvature_function(model)
    r = np.linspace(0, model.length, 5001)
    sel = model.m(r) > 1e-3
    assert np.max(np.abs(G(r[sel]) - G(model.length - r[sel]))) <= 1e-6


@pytest.mark.parametrize("name", ["sphere", "ellipsoid", "exotic"])
def test_definition_consistency(request, name):
    model = request.getfixturevalue(name)
    r = np.linspace(0, model.length, 2001)[1:-1]
    m, _, m2, G = model.eval_all(r)
    assert np.max(np.abs(m2 + G * m) / np.maximum(np.abs(m2), np.abs(G * m)).clip(1e-300)) <= 1e-9


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 0.95))
def test_pole_closure_and_slope(frac):
    model = make_ellipsoid_profile(1.0, 1.0 + 2 * frac)
    m = model.eval_all(np.array([0.0, model.length / 2, model.length]))
    assert abs(m[0][0]) < 1e-14 and abs(m[0][2]) < 1e-12
    assert m[1][0] == pytest.approx(1.0, abs=1e-9)
    assert m[1][2] == pytest.approx(-1.0, abs=1e-9)
    assert abs(m[1][1]) < 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_area_weighted_radii_in_range(seed):
    model = make_sphere_profile(1.0)
    r = sample_radii(model, np.random.default_rng(seed), 200)
    assert np.all((r >= 0) & (r <= model.length))
