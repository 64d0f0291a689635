"""Comparison triangles and the verification suite.

A comparison triangle for side lengths ``(d_px, d_py, d_xy)`` is anchored at
the pole: ``p~`` is the pole, ``x~ = (d_px, 0)`` and ``y~ = (d_py, dtheta)``
with ``dtheta`` chosen so that ``d(x~, y~) = d_xy``.  Test spaces supply
triangles with a vertex at their own base point and the angle comparison
``angle(test) >= angle(model)`` is checked vertex by vertex.
"""

from __future__ import annotations

import json
import math
import weakref
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from . import __version__
from .distances import cut_locus, diameter, distance
from .errors import (
    HypothesisViolated,
    InvalidParameter,
    NoComparisonTriangle,
)
from .geodesics import DEFAULT_TOL, GeodesicState, SurfacePoint, conjugate_point, integrate_geodesic
from .nmodel import (
    NModelPoint,
    TriangleSample,
    nmodel_distance,
    nmodel_triangle_sample,
    random_direction,
    random_orthogonal,
    slice_triangle,
)
from .profiles import SurfaceModel, radial_curvature_function, sample_radii

REPORT_SCHEMA = "revgeom.comparison-report/1"
ANGLE_TOL = 1e-5
PERIMETER_TOL = 1e-7

CHECK_NAMES = {
    "a": "perimeter bound",
    "b": "diameter equals pi",
    "c": "cut locus on the opposite half meridian",
    "d": "pole distance identity d(p,x) + d(x,q) = pi",
    "e": "meridian conjugate time equals pi",
}


@dataclass(frozen=True)
class TriangleSides:
    d_px: float
    d_py: float
    d_xy: float

    def __post_init__(self):
        for v in (self.d_px, self.d_py, self.d_xy):
            if not (v > 0 and math.isfinite(v)):
                raise InvalidParameter(f"side lengths must be positive, got {self}")

    @property
    def perimeter(self) -> float:
        return self.d_px + self.d_py + self.d_xy

    def triangle_defect(self) -> float:
        """Largest violation of the three triangle inequalities (<= 0 when valid)."""
        a, b, c = self.d_px, self.d_py, self.d_xy
        return max(a - b - c, b - a - c, c - a - b)


@dataclass(frozen=True, eq=False)
class TriangleConfig:
    model: SurfaceModel
    delta_theta: float
    sides: TriangleSides
    realized: TriangleSides
    angles: tuple

    @property
    def vertices(self):
        return (SurfacePoint(0.0, 0.0), SurfacePoint(self.sides.d_px, 0.0),
                SurfacePoint(self.sides.d_py, self.delta_theta))

    @property
    def side_defect(self) -> float:
        return max(abs(a - b) for a, b in zip(asdict(self.sides).values(),
                                                asdict(self.realized).values()))


# ---------------------------------------------------------------------------
# monotonicity of d in the angular separation

_MONOTONE: "weakref.WeakKeyDictionary[SurfaceModel, bool]" = weakref.WeakKeyDictionary()


def separation_is_monotone(model: SurfaceModel, n_r: int = 4, n_theta: int = 13,
                           slack: float = 1e-9) -> bool:
    """Check on a grid that ``d((r1,0),(r2,t))`` is non-decreasing in ``t``.

    Cached per model instance.
    """
    if model in _MONOTONE:
        return _MONOTONE[model]
    L = model.length
    rs = L * (np.arange(1, n_r + 1) / (n_r + 1))
    ths = np.linspace(0.0, math.pi, n_theta)
    ok = True
    for i, r1 in enumerate(rs):
        for r2 in rs[i:]:
            d = [distance(model, SurfacePoint(r1, 0.0), SurfacePoint(r2, t)).distance for t in ths]
            if np.min(np.diff(d)) < -slack:
                ok = False
                break
        if not ok:
            break
    _MONOTONE[model] = ok
    return ok


def comparison_triangle(model: SurfaceModel, sides: TriangleSides,
                        tol: float = DEFAULT_TOL) -> TriangleConfig:
    """Triangle in ``model`` with vertex at the pole and the given side lengths."""
    L = model.length
    a, b, c = sides.d_px, sides.d_py, sides.d_xy
    if a > L * (1 + 1e-12) or b > L * (1 + 1e-12):
        raise NoComparisonTriangle(f"sides to the pole must not exceed {L}", None)
    x = SurfacePoint(min(a, L), 0.0)

    def d_at(t):
        return distance(model, x, SurfacePoint(min(b, L), t), tol).distance

    lo_val = abs(a - b)
    hi_val = d_at(math.pi)
    if not (lo_val - 1e-12 <= c <= hi_val + 1e-12):
        raise NoComparisonTriangle(
            f"d_xy={c!r} outside the feasible range [{lo_val!r}, {hi_val!r}]", (lo_val, hi_val)
        )

    def h(t):
        return d_at(t) - c

    if c <= lo_val:
        dth = 0.0
    elif c >= hi_val:
        dth = math.pi
    elif separation_is_monotone(model):
        dth = brentq(h, 0.0, math.pi, xtol=1e-14, rtol=1e-15, maxiter=200)
    else:
        ts = np.linspace(0.0, math.pi, 257)
        vals = np.array([h(t) for t in ts])
        k = int(np.flatnonzero(vals >= 0.0)[0])
        dth = ts[0] if k == 0 else brentq(h, ts[k - 1], ts[k], xtol=1e-14, rtol=1e-15)
    d_xy, ap, ax, ay = slice_triangle(model, x.r, min(b, L), dth, tol)
    realized = TriangleSides(x.r, min(b, L), max(d_xy, 1e-300))
    return TriangleConfig(model, float(dth), sides, realized, (ap, ax, ay))


# ---------------------------------------------------------------------------
# test spaces


class TestSpace:
    """A space with a base point whose triangles ``(p, x, y)`` we can sample."""

    __test__ = False  # not a pytest class
    name = "test-space"
    dimension = 2

    @property
    def diameter(self) -> float:
        raise NotImplementedError

    def radial_curvature(self, r):
        raise NotImplementedError

    def sample_triangle(self, rng: np.random.Generator) -> TriangleSample:
        raise NotImplementedError


class RoundSphere(TestSpace):
    """Round n-sphere of constant curvature ``K`` (spherical trigonometry)."""

    def __init__(self, K: float, dimension: int = 2):
        if not K > 0:
            raise InvalidParameter("curvature must be positive")
        self.K = float(K)
        self.k = math.sqrt(self.K)
        self.dimension = dimension
        self.name = f"sphere(K={K:g})"

    @property
    def diameter(self):
        return math.pi / self.k

    def radial_curvature(self, r):
        return np.full_like(np.asarray(r, dtype=np.float64), self.K)

    def side(self, a, b, dth):
        k = self.k
        c = math.cos(k * a) * math.cos(k * b) + math.sin(k * a) * math.sin(k * b) * math.cos(dth)
        return math.acos(min(1.0, max(-1.0, c))) / k

    def _angle(self, adj1, adj2, opp):
        k = self.k
        a, b, c = k * adj1, k * adj2, k * opp
        num = math.cos(c) - math.cos(a) * math.cos(b)
        den = math.sin(a) * math.sin(b)
        return math.acos(min(1.0, max(-1.0, num / den)))

    def triangle(self, a, b, dth) -> TriangleSample:
        c = self.side(a, b, dth)
        return TriangleSample(a, b, c, dth, self._angle(a, c, b), self._angle(b, c, a),
                              self.dimension)

    def sample_triangle(self, rng, min_side: float = 1e-2, min_angle: float = 1e-2):
        D = self.diameter
        while True:
            a, b = np.arccos(1.0 - 2.0 * rng.uniform(size=2)) / self.k
            dth = abs(math.remainder(rng.uniform(0, 2 * math.pi) - rng.uniform(0, 2 * math.pi),
                                     2 * math.pi))
            if min(a, b, D - a, D - b) < min_side * D or dth < min_angle:
                continue
            t = self.triangle(float(a), float(b), dth)
            if t.d_xy >= min_side * D:
                return t


class ModelTestSpace(TestSpace):
    """The n-dimensional model of a surface (``n = 2``: the surface itself)."""

    def __init__(self, model: SurfaceModel, n: int = 2, tol: float = DEFAULT_TOL):
        self.model, self.dimension, self.tol = model, int(n), tol
        self.name = f"{model.name}^({n})"
        self._G = radial_curvature_function(model)

    @property
    def diameter(self):
        return self.model.length

    def radial_curvature(self, r):
        return self._G(np.asarray(r, dtype=np.float64))

    def sample_triangle(self, rng, min_angle: float = 1e-2):
        while True:
            t = nmodel_triangle_sample(self.model, self.dimension, rng, self.tol)
            if t.angle_p >= min_angle:
                return t


def check_domination(test_space: TestSpace, model: SurfaceModel, n_grid: int = 1000,
                     tol: float = 1e-9):
    """Radial curvature of ``test_space`` must dominate ``G`` of ``model``."""
    R = min(test_space.diameter, model.length)
    r = np.linspace(0.0, R, n_grid)
    gt = np.asarray(test_space.radial_curvature(r), dtype=np.float64)
    gm = radial_curvature_function(model)(r)
    gap = gt - gm
    i = int(np.argmin(gap))
    if gap[i] < -tol:
        raise HypothesisViolated(
            f"radial curvature of {test_space.name} ({gt[i]:.12g}) is below the model curvature "
            f"({gm[i]:.12g}) at r={r[i]:.9g}"
        )
    return float(gap[i])


@dataclass
class ComparisonRecord:
    sides: tuple
    test_angles: tuple
    model_angles: tuple
    margins: tuple
    delta_theta: float
    side_defect: float
    passed: bool
    note: str = ""

    def to_dict(self):
        return asdict(self)


@dataclass
class ComparisonReport:
    records: list = field(default_factory=list)
    counterexamples: list = field(default_factory=list)
    seed: Optional[int] = None
    checks: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        if self.counterexamples:
            return False
        return all(c.get("passed", False) for c in self.checks.values())

    @property
    def min_margin(self) -> float:
        return min((min(r.margins) for r in self.records), default=math.inf)

    @property
    def failed_checks(self):
        return [c["name"] for c in self.checks.values() if not c.get("passed", False)]

    def add(self, rec: ComparisonRecord):
        self.records.append(rec)
        if not rec.passed:
            self.counterexamples.append(rec)

    def to_dict(self, include_records: bool = True) -> dict:
        out = {"schema": REPORT_SCHEMA, "toolkit_version": __version__, "seed": self.seed,
               "passed": self.passed, "checks": self.checks, "meta": self.meta,
               "counterexamples": [r.to_dict() for r in self.counterexamples]}
        if self.records:
            out["min_margin"] = self.min_margin
            out["n_records"] = len(self.records)
        if include_records:
            out["records"] = [r.to_dict() for r in self.records]
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(**kw), indent=2, sort_keys=True)


def check_angle_comparison(test_space: TestSpace, model: SurfaceModel,
                           triangle: TriangleSample, tol: float = ANGLE_TOL,
                           solver_tol: float = DEFAULT_TOL, *, precheck: bool = True) -> ComparisonRecord:
    """Compare the test-space angles with those of the comparison triangle."""
    if precheck:
        check_domination(test_space, model)
    sides = TriangleSides(*triangle.sides)
    try:
        cfg = comparison_triangle(model, sides, solver_tol)
    except NoComparisonTriangle as exc:
        return ComparisonRecord(sides=triangle.sides, test_angles=triangle.angles,
                                model_angles=(math.nan,) * 3, margins=(-math.inf,) * 3,
                                delta_theta=math.nan, side_defect=math.nan, passed=False,
                                note=f"infeasible comparison triangle: {exc}")
    margins = tuple(t - m for t, m in zip(triangle.angles, cfg.angles))
    return ComparisonRecord(sides=triangle.sides, test_angles=triangle.angles,
                            model_angles=cfg.angles, margins=margins,
                            delta_theta=cfg.delta_theta, side_defect=cfg.side_defect,
                            passed=min(margins) >= -tol)


def compare(test_space: TestSpace, model: SurfaceModel, samples: int, seed: int = 0,
            tol: float = ANGLE_TOL) -> ComparisonReport:
    """Sample ``samples`` triangles in ``test_space`` and check each against ``model``."""
    gap = check_domination(test_space, model)
    rng = np.random.default_rng(seed)
    rep = ComparisonReport(seed=seed, meta={"test_space": test_space.name, "model": model.name,
                                            "domination_gap": gap, "samples": samples})
    for _ in range(samples):
        tri = test_space.sample_triangle(rng)
        rep.add(check_angle_comparison(test_space, model, tri, tol, precheck=False))
    rep.checks["angle"] = {"name": "angle comparison", "passed": not rep.counterexamples,
                           "min_margin": rep.min_margin, "tolerance": tol}
    return rep


# ---------------------------------------------------------------------------
# perimeter and the verification suite


def perimeter_check(model: SurfaceModel, triangle) -> float:
    """``2 * (2a) - perimeter`` for a triangle with a vertex at the pole."""
    if isinstance(triangle, TriangleConfig):
        sides = triangle.realized
    elif isinstance(triangle, TriangleSample):
        sides = TriangleSides(*triangle.sides)
    else:
        sides = triangle
    return 2.0 * model.length - sides.perimeter


def random_pole_triangles(model: SurfaceModel, rng, count: int, tol: float = DEFAULT_TOL):
    """Yield ``(x, y, TriangleSides)`` for area-weighted random ``x, y``."""
    r = sample_radii(model, rng, 2 * count)
    th = rng.uniform(0.0, 2 * math.pi, 2 * count)
    for i in range(count):
        x = SurfacePoint(float(r[2 * i]), float(th[2 * i]))
        y = SurfacePoint(float(r[2 * i + 1]), float(th[2 * i + 1]))
        dxy = distance(model, x, y, tol).distance
        yield x, y, TriangleSides(max(x.r, 1e-300), max(y.r, 1e-300), max(dxy, 1e-300))


def perimeter_suite(model: SurfaceModel, samples: int, seed: int, tol: float = PERIMETER_TOL):
    rng = np.random.default_rng(seed)
    worst, witness = math.inf, None
    for x, y, s in random_pole_triangles(model, rng, samples):
        m = perimeter_check(model, s)
        if m < worst:
            worst, witness = m, (x.r, x.theta, y.r, y.theta)
    return {"name": CHECK_NAMES["a"], "passed": worst >= -tol, "min_margin": worst,
            "tolerance": tol, "samples": samples, "witness": witness}


def pole_distance_identity(model: SurfaceModel, x: SurfacePoint, eps: float = 1e-6,
                           tol: float = DEFAULT_TOL) -> float:
    """``d(p,x) + d(x,q) - 2a`` measured with the general solver.

    The pole distances are read off the distances to points ``eps * 2a``
    beyond each pole on the opposite meridian, so the full direction scan
    has to confirm that the route through the pole is minimal.
    """
    L = model.length
    e = eps * L
    opp = x.theta + math.pi
    d_p = distance(model, x, SurfacePoint(e, opp), tol).distance - e
    d_q = distance(model, x, SurfacePoint(L - e, opp), tol).distance - e
    return d_p + d_q - L


def meridian_jacobi(model: SurfaceModel, tol: float = DEFAULT_TOL):
    """``(conjugate time error, max relative |y - m|)`` along the meridian from ``p``."""
    L = model.length
    start = GeodesicState(SurfacePoint(0.0, 0.0), 0.0, 0.0)
    cp = conjugate_point(model, start, 1.2 * L, tol)
    err_t = abs(cp.t - L) if cp is not None else math.inf
    path = integrate_geodesic(model, start, 0.9 * L, tol, jacobi=True)
    sel = path.t >= 0.1 * L
    m = model.m(path.t[sel])
    rel = float(np.max(np.abs(path.jacobi[sel, 0] - m) / np.abs(m)))
    return err_t, rel


def verify_lemma_suite(model: SurfaceModel, samples: int = 1000, seed: int = 0, *,
                       cut_points: int = 3, cut_grid: int = 17,
                       diameter_samples: Optional[int] = None,
                       identity_samples: Optional[int] = None) -> ComparisonReport:
    """Run the five checks (a)-(e) on a rescaled model (``2a = pi``)."""
    if abs(model.length - math.pi) > 1e-9:
        raise InvalidParameter(f"suite expects a rescaled model with 2a = pi, got {model.length}")
    rep = ComparisonReport(seed=seed, meta={"model": model.name, "samples": samples,
                                            "cut_points": cut_points})
    ss = np.random.SeedSequence(seed)
    seeds = [int(s.generate_state(1)[0]) for s in ss.spawn(4)]

    rep.checks["a"] = perimeter_suite(model, samples, seeds[0])

    dia = diameter(model, diameter_samples or samples, seeds[1])
    wp = sorted(w.r for w in dia.witnesses)
    pole_err = max(wp[0], math.pi - wp[1])
    rep.checks["b"] = {"name": CHECK_NAMES["b"], "value": dia.value,
                       "error": abs(dia.value - math.pi), "witness_pole_error": pole_err,
                       "passed": abs(dia.value - math.pi) <= 1e-4 and pole_err <= 1e-3}

    rng = np.random.default_rng(seeds[2])
    constant = model.trend == "constant"
    worst_dev, kinds = 0.0, []
    for _ in range(cut_points):
        r0 = float(rng.uniform(0.05, 0.95)) * math.pi
        res = cut_locus(model, SurfacePoint(r0, float(rng.uniform(0, 2 * math.pi))), grid=cut_grid)
        worst_dev = max(worst_dev, res.max_theta_deviation)
        kinds.append(res.kind)
    kind_ok = all(k == "single-point" for k in kinds) if constant else \
        all(k == "meridian-subarc" for k in kinds)
    rep.checks["c"] = {"name": CHECK_NAMES["c"], "max_theta_deviation": worst_dev,
                       "kinds": kinds, "passed": worst_dev <= 1e-3 and kind_ok}

    rng = np.random.default_rng(seeds[3])
    n_id = identity_samples or samples
    r = sample_radii(model, rng, n_id)
    th = rng.uniform(0, 2 * math.pi, n_id)
    worst = max(abs(pole_distance_identity(model, SurfacePoint(float(a), float(b))))
                for a, b in zip(r, th))
    rep.checks["d"] = {"name": CHECK_NAMES["d"], "max_defect": worst, "samples": n_id,
                       "passed": worst <= 1e-7}

    err_t, rel = meridian_jacobi(model)
    rep.checks["e"] = {"name": CHECK_NAMES["e"], "conjugate_time_error": err_t,
                       "jacobi_vs_profile": rel, "passed": err_t <= 1e-8 and rel <= 1e-8}
    return rep


# ---------------------------------------------------------------------------
# rigidity


def _isometry(kind, rng, n):
    if isinstance(kind, np.ndarray):
        return kind
    if kind == "identity":
        return np.eye(n)
    if kind == "reflection":
        I = np.eye(n)
        I[-1, -1] = -1.0
        return I
    if kind == "rotation":
        return random_orthogonal(rng, n, proper=True)
    if kind == "random":
        return random_orthogonal(rng, n)
    raise InvalidParameter(f"unknown isometry {kind!r}")


def rigidity_isometry_check(model: SurfaceModel, n: int = 3, pairs: int = 100, seed: int = 0,
                            isometry="rotation", tol: float = 1e-5) -> dict:
    """Check that ``phi = exp o I o exp^-1`` preserves distances on the n-model.

    In polar coordinates about the poles ``phi(r, u) = (r, I u)`` and
    ``phi(q) = q~``.
    """
    if n < 2:
        raise InvalidParameter("n must be >= 2")
    rng = np.random.default_rng(seed)
    I = _isometry(isometry, rng, n)
    if not np.allclose(I.T @ I, np.eye(n), atol=1e-12):
        raise InvalidParameter("I must be orthogonal")
    L = model.length

    def draw():
        if rng.uniform() < 0.02:
            return NModelPoint(L if rng.uniform() < 0.5 else 0.0, None)
        return NModelPoint(float(sample_radii(model, rng, 1)[0]), random_direction(rng, n))

    def phi(P):
        if P.direction is None:
            return P
        return NModelPoint(P.r, I @ P.direction)

    worst, witness = 0.0, None
    for _ in range(pairs):
        X, Y = draw(), draw()
        d0 = nmodel_distance(model, n, X, Y).distance
        d1 = nmodel_distance(model, n, phi(X), phi(Y)).distance
        if abs(d1 - d0) > worst or witness is None:
            worst = max(worst, abs(d1 - d0))
            witness = {"x_r": X.r, "y_r": Y.r, "d": d0, "d_image": d1}
    return {"name": "rigidity isometry", "n": n, "pairs": pairs, "seed": seed,
            "isometry": isometry if isinstance(isometry, str) else "matrix",
            "max_defect": worst, "tolerance": tol, "passed": worst <= tol, "witness": witness}
