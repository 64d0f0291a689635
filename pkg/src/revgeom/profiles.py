"""Profile functions ``m(r)`` of 2-spheres of revolution and their validation.

A surface is the metric ``dr^2 + m(r)^2 dtheta^2`` on ``(0, 2a) x S^1``
closed off by two poles.  Three closed forms are built in (round sphere,
prolate ellipsoid, and a two-mode sine profile with negative equatorial
curvature) plus tabulated profiles loaded from ``(r, m)`` samples.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicHermiteSpline, CubicSpline
from scipy.special import ellipeinc

from . import _kernels as K
from .errors import (
    InvalidParameter,
    NotProlate,
    OutOfDomain,
    ResolutionError,
    ValidationFailure,
)

_KIND_NAMES = {K.SPHERE: "sphere", K.EXOTIC: "exotic", K.ELLIPSOID: "ellipsoid", K.TABLE: "table"}
_DUMMY_XS = np.array([0.0, 1.0])
_DUMMY_CS = np.zeros((1, 4))

EXOTIC_LENGTH = 3.0 * math.sqrt(3.0) * math.pi


@dataclass(frozen=True, eq=False)
class ProfileCurve:
    """A warping function ``m`` on ``[0, domain_end]``.

    ``lam`` is the metric scale: the curve evaluates ``lam * m0(r / lam)`` for
    the unscaled base profile ``m0`` of length ``base_length``.
    """

    kind: int
    params: tuple
    base_length: float
    lam: float = 1.0
    xs: np.ndarray = field(default=_DUMMY_XS, repr=False)
    cs: np.ndarray = field(default=_DUMMY_CS, repr=False)

    @property
    def domain_end(self) -> float:
        return self.lam * self.base_length

    @property
    def representation(self) -> str:
        return "tabulated-spline" if self.kind in (K.ELLIPSOID, K.TABLE) else "closed-form"

    @cached_property
    def kernel_args(self):
        p0 = float(self.params[0]) if len(self.params) > 0 else 0.0
        p1 = float(self.params[1]) if len(self.params) > 1 else 0.0
        return (
            int(self.kind),
            float(self.lam),
            p0,
            p1,
            float(self.base_length),
            np.ascontiguousarray(self.xs, dtype=np.float64),
            np.ascontiguousarray(self.cs, dtype=np.float64),
        )

    def _many(self, r):
        r = np.asarray(r, dtype=np.float64)
        out = K.profile_eval_many(self.kernel_args, np.atleast_1d(r).ravel())
        return out.reshape((4,) + r.shape)

    def evaluate(self, r):
        """Stack ``(m, m', m'', G)`` evaluated at ``r`` (scalar or array)."""
        return self._many(r)

    def eval(self, r):
        return self._many(r)[0]

    def deriv1(self, r):
        return self._many(r)[1]

    def deriv2(self, r):
        return self._many(r)[2]

    def scaled(self, factor: float) -> "ProfileCurve":
        return dataclasses.replace(self, lam=self.lam * factor)


@dataclass(frozen=True, eq=False)
class SurfaceModel:
    """A validated profile together with its name and scale bookkeeping."""

    profile: ProfileCurve
    name: str
    scale: float = 1.0
    monotone_G: bool = False
    trend: str = "unknown"
    spec: dict = field(default_factory=dict, repr=False)

    @property
    def length(self) -> float:
        """Pole separation ``2a``."""
        return self.profile.domain_end

    @property
    def half(self) -> float:
        return 0.5 * self.profile.domain_end

    @property
    def kernel_args(self):
        return self.profile.kernel_args

    @property
    def constant_curvature(self) -> bool:
        return self.trend == "constant"

    def m(self, r):
        return self.profile.eval(r)

    def eval_all(self, r):
        return self.profile.evaluate(r)

    @cached_property
    def m_max(self) -> float:
        g = np.linspace(0.0, self.length, 8193)
        return float(np.max(self.profile.eval(g)))

    @cached_property
    def _area_table(self):
        g = np.linspace(0.0, self.length, 8193)
        return g, self.profile.eval(g)

    def describe(self) -> dict:
        return {
            "name": self.name,
            "kind": _KIND_NAMES[self.profile.kind],
            "params": dict(self.spec.get("params", {})),
            "scale": self.scale,
            "pole_distance": self.length,
            "monotone_G": self.monotone_G,
            "curvature_trend": self.trend,
        }


@dataclass(frozen=True)
class CurvatureReport:
    samples: list
    min_G: float
    max_G: float
    monotone_on_half: bool
    symmetry_defect: float
    trend: str
    pole_defect: float
    equator_slope: float

    def to_dict(self) -> dict:
        return {
            "schema": "revgeom.curvature-report/1",
            "min_G": self.min_G,
            "max_G": self.max_G,
            "monotone_on_half": self.monotone_on_half,
            "trend": self.trend,
            "symmetry_defect": self.symmetry_defect,
            "pole_defect": self.pole_defect,
            "equator_slope": self.equator_slope,
            "samples": [[float(r), float(g)] for r, g in self.samples],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# constructors


def _finish(profile, name, spec, validate=True):
    model = SurfaceModel(profile=profile, name=name, spec=spec)
    if not validate:
        return model
    report = validate_model(model, strict=False)
    return dataclasses.replace(model, monotone_G=report.monotone_on_half, trend=report.trend)


def make_sphere_profile(H: float) -> SurfaceModel:
    """Round sphere of constant curvature ``H``: ``m(r) = sin(sqrt(H) r) / sqrt(H)``."""
    if not (H > 0 and math.isfinite(H)):
        raise InvalidParameter(f"sphere curvature must be positive, got {H!r}")
    prof = ProfileCurve(K.SPHERE, (float(H),), math.pi / math.sqrt(H))
    return _finish(prof, f"sphere:{H:g}", {"kind": "sphere", "params": {"H": float(H)}})


def make_exotic_profile() -> SurfaceModel:
    """The two-mode profile ``(sqrt3/10)(9 sin(sqrt3 t/9) + 7 sin(sqrt3 t/3))``.

    Pole distance ``3 sqrt3 pi``; curvature is negative near the equator.
    """
    prof = ProfileCurve(K.EXOTIC, (), EXOTIC_LENGTH)
    return _finish(prof, "exotic", {"kind": "exotic", "params": {}})


def _ellipse_arclength(u, a, b):
    # r(u) = int_0^u sqrt(a^2 cos^2 + b^2 sin^2) = b [E(pi/2|k) - E(pi/2 - u|k)]
    k = 1.0 - (a / b) ** 2
    return b * (ellipeinc(0.5 * math.pi, k) - ellipeinc(0.5 * math.pi - u, k))


def _ellipse_speed(u, a, b):
    return np.sqrt((a * np.cos(u)) ** 2 + (b * np.sin(u)) ** 2)


def invert_arclength(r, a, b, xtol=1e-12):
    """Meridian parameter ``u`` with ``r(u) = r`` by vectorised bisection + Newton polish."""
    r = np.asarray(r, dtype=np.float64)
    lo = np.zeros_like(r)
    hi = np.full_like(r, math.pi)
    while np.max(hi - lo) > xtol:
        mid = 0.5 * (lo + hi)
        below = _ellipse_arclength(mid, a, b) < r
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    u = 0.5 * (lo + hi)
    for _ in range(2):
        u = u - (_ellipse_arclength(u, a, b) - r) / _ellipse_speed(u, a, b)
    return np.clip(u, 0.0, math.pi)


def make_ellipsoid_profile(a_eq: float, b_polar: float, grid: int = 4096,
                           interp_tol: float = 1e-10) -> SurfaceModel:
    """Prolate spheroid with equatorial radius ``a_eq`` and polar semi-axis ``b_polar``.

    The meridian ellipse ``(a sin u, b cos u)`` is reparametrised by arclength.
    The inverse map ``u(r)`` is tabulated on ``grid`` uniform intervals as a
    cubic Hermite spline with exact slopes ``du/dr = 1/|ellipse'(u)|``; the
    profile and its derivatives are then closed-form in ``u``.
    """
    if not (a_eq > 0 and b_polar > 0):
        raise InvalidParameter("ellipsoid semi-axes must be positive")
    if not b_polar > a_eq:
        raise NotProlate(f"need b_polar > a_eq, got a_eq={a_eq}, b_polar={b_polar}")
    grid = int(grid)
    if grid < 8:
        raise ResolutionError(f"grid={grid} is too coarse")
    a, b = float(a_eq), float(b_polar)
    L = 2.0 * b * float(ellipeinc(0.5 * math.pi, 1.0 - (a / b) ** 2))
    rs = np.linspace(0.0, L, grid + 1)
    us = invert_arclength(rs, a, b)
    us[0], us[-1] = 0.0, math.pi
    spline = CubicHermiteSpline(rs, us, 1.0 / _ellipse_speed(us, a, b))
    cs = np.ascontiguousarray(spline.c.T)

    mids = 0.5 * (rs[1:] + rs[:-1])
    u_true = invert_arclength(mids, a, b)
    defect = float(np.max(np.abs(a * np.sin(spline(mids)) - a * np.sin(u_true))))
    if defect > interp_tol:
        raise ResolutionError(
            f"grid={grid} gives interpolation defect {defect:.3e} > {interp_tol:.1e}"
        )
    prof = ProfileCurve(K.ELLIPSOID, (a, b), L, xs=rs, cs=cs)
    spec = {"kind": "ellipsoid", "params": {"a_eq": a, "b_polar": b, "grid": grid}}
    return _finish(prof, f"ellipsoid:{a:g},{b:g}", spec)


def make_table_profile(r_samples, m_samples, name: str = "table",
                       validate: bool = True) -> SurfaceModel:
    """Profile interpolated from samples ``(r_i, m_i)`` with ``r_0 = 0``.

    The samples are extended oddly about both poles and fitted by a periodic
    cubic spline, which makes ``m''`` vanish at the poles as smoothness of
    the closed surface requires.
    """
    r = np.asarray(r_samples, dtype=np.float64)
    m = np.asarray(m_samples, dtype=np.float64)
    if r.ndim != 1 or r.shape != m.shape or r.size < 8:
        raise InvalidParameter("table needs matching 1-D r and m arrays with >= 8 samples")
    if abs(r[0]) > 0 or np.any(np.diff(r) <= 0):
        raise InvalidParameter("table radii must start at 0 and increase strictly")
    L = float(r[-1])
    scale = max(1.0, float(np.max(np.abs(m))))
    if abs(m[0]) > 1e-12 * scale or abs(m[-1]) > 1e-12 * scale:
        raise ValidationFailure("pole closure m(0)=m(2a)=0", 0.0 if abs(m[0]) > 0 else L)
    x = np.concatenate([-r[:0:-1], r])
    y = np.concatenate([-m[:0:-1], m])
    y[0] = y[-1] = 0.0
    spline = CubicSpline(x, y, bc_type="periodic")
    start = r.size - 1
    xs = np.ascontiguousarray(spline.x[start:])
    cs = np.ascontiguousarray(spline.c[:, start:].T)
    prof = ProfileCurve(K.TABLE, (), L, xs=xs, cs=cs)
    spec = {"kind": "table", "params": {}, "samples": [[float(a), float(b)] for a, b in zip(r, m)]}
    return _finish(prof, name, spec, validate=validate)


# ---------------------------------------------------------------------------
# curvature and validation


def _pole_curvature(model: SurfaceModel, at_q: bool) -> float:
    L = model.length
    h = 2e-4 * L
    w = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / (12.0 * h)
    k = np.arange(5)
    if at_q:
        m1 = float(model.profile.deriv1(L))
        m3 = -float(w @ model.profile.deriv2(L - k * h))
    else:
        m1 = float(model.profile.deriv1(0.0))
        m3 = float(w @ model.profile.deriv2(k * h))
    return float(-m3 / m1)


def gaussian_curvature(model: SurfaceModel, r: float) -> float:
    """``G(r) = -m''(r)/m(r)``; at the poles the one-sided limit ``-m'''/m'``."""
    L = model.length
    r = float(r)
    if not (0.0 <= r <= L):
        raise OutOfDomain(f"r={r} outside [0, {L}]")
    if r == 0.0:
        return _pole_curvature(model, at_q=False)
    if r == L:
        return _pole_curvature(model, at_q=True)
    return float(model.profile.evaluate(r)[3])


def radial_curvature_function(model: SurfaceModel):
    """Callable ``r -> G(r)`` on ``[0, 2a]`` (vectorised)."""
    prof = model.profile

    def G(r):
        return prof.evaluate(r)[3]

    return G


def validate_model(model: SurfaceModel, tol: float = 1e-8, *, strict: bool = True,
                   n_grid: int = 10_000, margin: float = 1e-3, slack: float = 1e-9,
                   deriv_tol: float = 1e-6) -> CurvatureReport:
    """Check pole closure, reflective symmetry and monotone curvature.

    Curvature must be non-increasing (up to ``slack`` per grid step) on
    ``(margin * 2a, a]``.  Constant curvature is reported as trend
    ``"constant"`` and counts as monotone.  With ``strict`` every violation
    raises :class:`ValidationFailure`; otherwise a monotonicity violation is
    only recorded in the report.
    """
    prof = model.profile
    L = model.length
    a = 0.5 * L
    ends = prof.evaluate(np.array([0.0, L, a]))
    scale = max(1.0, model.m_max)
    pole_defect = max(abs(ends[0, 0]), abs(ends[0, 1])) / scale
    if pole_defect > tol:
        raise ValidationFailure("pole closure m(0)=m(2a)=0", 0.0, f"defect {pole_defect:.3e}")
    if abs(ends[1, 0] - 1.0) > deriv_tol:
        raise ValidationFailure("pole closure m'(0)=1", 0.0, f"m'(0)={ends[1, 0]:.12g}")
    if abs(ends[1, 1] + 1.0) > deriv_tol:
        raise ValidationFailure("pole closure m'(2a)=-1", L, f"m'(2a)={ends[1, 1]:.12g}")
    equator_slope = float(ends[1, 2])
    if abs(equator_slope) > deriv_tol:
        raise ValidationFailure("equator slope m'(a)=0", a, f"m'(a)={equator_slope:.3e}")

    r = np.linspace(0.0, L, n_grid + 1)[1:-1]
    vals = prof.evaluate(r)
    mirror = prof.eval(L - r)
    if np.any(vals[0] <= 0):
        bad = float(r[np.argmax(vals[0] <= 0)])
        raise ValidationFailure("positivity m(r)>0 on (0,2a)", bad)
    sym = np.abs(mirror - vals[0])
    symmetry_defect = float(np.max(sym))
    if np.any(sym > tol * (1.0 + vals[0])):
        bad = float(r[np.argmax(sym > tol * (1.0 + vals[0]))])
        raise ValidationFailure("reflective symmetry about the equator", bad,
                                f"defect {symmetry_defect:.3e}")

    rh = np.linspace(margin * L, a, n_grid // 2 + 1)
    Gh = prof.evaluate(rh)[3]
    steps = np.diff(Gh)
    gscale = max(1.0, float(np.max(np.abs(Gh))))
    if float(np.max(Gh) - np.min(Gh)) <= slack * gscale:
        trend = "constant"
    elif np.all(steps <= slack):
        trend = "decreasing"
    elif np.all(steps >= -slack):
        trend = "increasing"
    else:
        trend = "mixed"
    monotone = trend in ("constant", "decreasing")
    if strict and not monotone:
        i = int(np.argmax(steps))
        raise ValidationFailure("curvature strictly decreasing from pole to equator",
                                float(rh[i]), f"G increases by {steps[i]:.3e}")

    n_rep = 201
    step = L / n_rep
    rr = np.linspace(0.5 * step, L - 0.5 * step, n_rep)
    gg = prof.evaluate(rr)[3]
    allG = np.concatenate([vals[3], [gaussian_curvature(model, 0.0), gaussian_curvature(model, L)]])
    return CurvatureReport(
        samples=list(zip(rr.tolist(), gg.tolist())),
        min_G=float(np.min(allG)),
        max_G=float(np.max(allG)),
        monotone_on_half=monotone,
        symmetry_defect=symmetry_defect,
        trend=trend,
        pole_defect=float(pole_defect),
        equator_slope=equator_slope,
    )


def rescale_model(model: SurfaceModel) -> SurfaceModel:
    """Scale the metric so that the pole distance becomes ``pi``.

    ``m_new(r) = lam * m(r / lam)`` with ``lam = pi / 2a``; curvature scales by
    ``lam**-2``.  Already-normalised models are returned unchanged.
    """
    lam = math.pi / model.length
    if abs(lam - 1.0) < 1e-14:
        return model
    prof = model.profile.scaled(lam)
    spec = dict(model.spec)
    spec["rescaled"] = True
    return dataclasses.replace(model, profile=prof, scale=model.scale * lam, spec=spec,
                               name=model.name if model.name.endswith("@pi") else model.name + "@pi")


# ---------------------------------------------------------------------------
# surface definitions


def _parse_builtin(text: str) -> SurfaceModel:
    name, _, rest = text.partition(":")
    name = name.strip().lower()
    args = [float(x) for x in rest.split(",") if x.strip()] if rest else []
    if name == "sphere":
        return make_sphere_profile(args[0] if args else 1.0)
    if name == "ellipsoid":
        if len(args) not in (2, 3):
            raise InvalidParameter("ellipsoid spec is ellipsoid:a_eq,b_polar[,grid]")
        return make_ellipsoid_profile(args[0], args[1], *( [int(args[2])] if len(args) == 3 else []))
    if name == "exotic":
        return make_exotic_profile()
    raise InvalidParameter(f"unknown builtin surface {text!r}")


def model_from_dict(d: dict) -> SurfaceModel:
    kind = str(d.get("kind", "")).lower()
    params = d.get("params", {}) or {}
    if kind == "sphere":
        model = make_sphere_profile(float(params.get("H", 1.0)))
    elif kind == "ellipsoid":
        model = make_ellipsoid_profile(float(params["a_eq"]), float(params["b_polar"]),
                                       int(params.get("grid", 4096)))
    elif kind == "exotic":
        model = make_exotic_profile()
    elif kind == "table":
        samples = np.asarray(d["samples"], dtype=np.float64)
        model = make_table_profile(samples[:, 0], samples[:, 1], name=d.get("name", "table"))
    else:
        raise InvalidParameter(f"unknown surface kind {kind!r}")
    if d.get("name"):
        model = dataclasses.replace(model, name=str(d["name"]))
    if d.get("rescale"):
        model = rescale_model(model)
    return model


def load_surface(spec: str) -> SurfaceModel:
    """Build a model from ``name:params`` or a JSON surface-definition file."""
    path = Path(spec)
    if path.suffix.lower() == ".json" and path.exists():
        return model_from_dict(json.loads(path.read_text()))
    return _parse_builtin(spec)


def surface_to_dict(model: SurfaceModel) -> dict:
    d = {"name": model.name, "kind": _KIND_NAMES[model.profile.kind],
         "params": dict(model.spec.get("params", {}))}
    if "samples" in model.spec:
        d["samples"] = model.spec["samples"]
    if model.spec.get("rescaled"):
        d["rescale"] = True
    return d


# ---------------------------------------------------------------------------
# sampling


def sample_radii(model: SurfaceModel, rng: np.random.Generator, size: int,
                 power: int = 1) -> np.ndarray:
    """Radii with density proportional to ``m(r)**power`` (area weighting)."""
    g, mvals = model._area_table
    w = np.clip(mvals, 0.0, None) ** power
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (w[1:] + w[:-1]) * np.diff(g))])
    cdf /= cdf[-1]
    return np.interp(rng.random(size), cdf, g)
