"""Two-point distances, angles, cut loci and diameters by geodesic shooting.

For ``x = (r1, 0)`` and ``y = (r2, dtheta)`` with ``dtheta`` in ``(0, pi]``
every minimal geodesic with non-zero Clairaut constant has ``theta``
increasing monotonically from ``0`` to exactly ``dtheta`` (by the reflection
``theta -> -theta`` a minimiser cannot cross the opposite meridian in its
interior).  The shooting residual is therefore

    f(phi) = r(t*) - r2,   theta(t*) = dtheta,

a continuous function on ``(0, pi)`` with limits ``2a - r2`` at ``0+`` and
``-r2`` at ``pi-`` (the geodesic swings around the pole ``q`` resp. ``p``).
Meridians through the poles are added in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar

from . import _kernels as K
from .errors import SolverFailure, UnsupportedModel
from .geodesics import (
    DEFAULT_TOL,
    MAX_STEPS,
    GeodesicPath,
    GeodesicState,
    SurfacePoint,
    conjugate_point,
    integrate_geodesic,
    tolerances,
)
from .profiles import SurfaceModel, sample_radii

TWO_PI = 2.0 * math.pi
SCAN_TOL = 1e-6
TIE_REL = 1e-6


def separation(x: SurfacePoint, y: SurfacePoint):
    """Reduced angular separation in ``[0, pi]`` and the mirror sign."""
    d = (y.theta - x.theta) % TWO_PI
    if d <= math.pi:
        return d, 1.0
    return TWO_PI - d, -1.0


@dataclass(frozen=True, eq=False)
class DistanceResult:
    """Distance between ``x`` and ``y`` plus the minimising geodesics.

    ``directions`` are initial angles at ``x`` (against ``d/dr``, positive
    towards increasing ``theta``).  When ``x`` is a pole they are instead the
    departure meridian angles ``theta``.
    """

    distance: float
    x: SurfacePoint
    y: SurfacePoint
    directions: tuple
    lengths: tuple
    saturated: bool = False
    method: str = "shooting"
    model: Optional[SurfaceModel] = field(default=None, repr=False)
    from_pole: bool = False

    @property
    def multiplicity(self) -> int:
        return len(self.directions)

    @cached_property
    def minimizers(self) -> list:
        out = []
        for phi, length in zip(self.directions, self.lengths):
            if self.from_pole:
                start = GeodesicState(SurfacePoint(self.x.r, phi), 0.0, 0.0)
            else:
                start = GeodesicState.at(self.model, self.x.r, self.x.theta, phi)
            if length <= 0:
                continue
            out.append(integrate_geodesic(self.model, start, length))
        return out

    def to_dict(self) -> dict:
        return {
            "distance": self.distance,
            "from": [self.x.r, self.x.theta],
            "to": [self.y.r, self.y.theta],
            "multiplicity": self.multiplicity,
            "saturated": self.saturated,
            "directions": list(self.directions),
            "lengths": list(self.lengths),
            "method": self.method,
        }


def _shot(mp, r1, phi, target, L, mmax, tol):
    atol, rtol = tolerances(tol)
    nu = float(K.profile_eval(mp, r1)[0]) * math.sin(phi)
    tmax = 8.0 * L + 1.5 * target * mmax * mmax / max(nu, 1e-300)
    return K.theta_shot(mp, r1, phi, target, tmax, atol, rtol, L / 4.0, MAX_STEPS)


def shooting_candidates(model: SurfaceModel, r1: float, r2: float, dth: float,
                        tol: float = DEFAULT_TOL, n_scan: int = 512):
    """All connecting geodesics found by the direction scan.

    Returns ``(candidates, degenerate)`` with candidates as ``(length, phi)``
    in the reduced frame (``x`` at ``theta=0``, ``y`` at ``dth``).
    """
    mp = model.kernel_args
    L = model.length
    cands = []
    if dth <= 1e-15:
        cands.append((abs(r2 - r1), 0.0 if r2 >= r1 else math.pi))
        return cands, False
    at_pi = abs(dth - math.pi) <= 1e-13
    if at_pi:
        dth = math.pi
        cands.append((r1 + r2, math.pi))
        cands.append((2.0 * L - r1 - r2, 0.0))

    mmax = model.m_max
    phis = math.pi * np.arange(1, n_scan) / n_scan
    atol, rtol = tolerances(SCAN_TOL)
    rs, ts = K.theta_scan(mp, r1, phis, dth, mmax, L, atol, rtol, L / 4.0, MAX_STEPS)
    f = rs - r2
    if not at_pi:
        phis = np.concatenate([[0.0], phis, [math.pi]])
        f = np.concatenate([[L - r2], f, [-r2]])
        ts = np.concatenate([[np.nan], ts, [np.nan]])

    def g(phi):
        if phi <= 0.0:
            return L - r2
        if phi >= math.pi:
            return -r2
        st, t, r, _ = _shot(mp, r1, phi, dth, L, mmax, tol)
        if st != K.OK:
            raise SolverFailure(f"shot at phi={phi!r} did not reach theta={dth!r}")
        return r - r2

    inner = np.isfinite(f)
    if not at_pi:
        inner[0] = inner[-1] = False
    if inner.any() and np.max(np.abs(f[inner])) < 1e-4 * L:
        # possibly a continuum of connecting geodesics (antipodes of a round sphere)
        idx = np.flatnonzero(inner)
        # near-meridian shots are ill-conditioned, so probe the middle of the fan
        probe = idx[np.linspace(idx.size // 16, idx.size - 1 - idx.size // 16, 9).astype(int)]
        if all(abs(g(phis[i])) < 1e-9 * L for i in probe):
            for i in probe:
                t = _shot(mp, r1, phis[i], dth, L, mmax, tol)[1]
                cands.append((float(t), float(phis[i])))
            return cands, True
        # near-conjugate target: the residual is comparable to scan noise
        atol, rtol = tolerances(tol)
        rs, _ = K.theta_scan(mp, r1, phis[idx], dth, mmax, L, atol, rtol, L / 4.0, MAX_STEPS)
        f[idx] = rs - r2

    def polish(f):
        found, noisy = [], False
        for k in range(len(phis) - 1):
            fa, fb = f[k], f[k + 1]
            if not (np.isfinite(fa) and np.isfinite(fb)) or fa * fb > 0.0:
                continue
            if fa == 0.0 and not (k > 0 or at_pi):
                continue
            a, b = phis[k], phis[k + 1]
            ga, gb = g(a), g(b)
            if ga * gb > 0.0:
                noisy = True
                continue
            if ga == 0.0 or gb == 0.0:
                phi = a if ga == 0.0 else b
                if phi in (0.0, math.pi):
                    continue
            else:
                phi = brentq(g, a, b, xtol=1e-15, rtol=1e-15, maxiter=200)
            st, t, r, _ = _shot(mp, r1, phi, dth, L, mmax, tol)
            if st == K.OK and abs(r - r2) <= 1e-7:
                found.append((float(t), float(phi)))
        return found, noisy

    found, noisy = polish(f)
    if noisy:
        # the scan resolution hid or invented a sign change: redo it at full accuracy
        atol, rtol = tolerances(tol)
        sl = slice(None) if at_pi else slice(1, -1)
        rs, _ = K.theta_scan(mp, r1, phis[sl], dth, mmax, L, atol, rtol, L / 4.0, MAX_STEPS)
        f = f.copy()
        f[sl] = rs - r2
        found, _ = polish(f)
    cands.extend(found)
    return cands, False


def distance(model: SurfaceModel, x: SurfacePoint, y: SurfacePoint, tol: float = DEFAULT_TOL,
             *, n_scan: int = 512, tie_rel: float = TIE_REL, max_minimizers: int = 8,
             method: str = "shooting") -> DistanceResult:
    """Riemannian distance and minimising geodesics between two points.

    ``method`` is ``"shooting"`` (direction scan + Brent polish),
    ``"quadrature"`` (Clairaut integrals, raising when not applicable) or
    ``"both"`` (union of the candidate sets).
    """
    x = x.check(model)
    y = y.check(model)
    L = model.length
    px, py = x.pole(model), y.pole(model)

    if px or py:
        return _pole_distance(model, x, y, px, py, max_minimizers)

    dth, sign = separation(x, y)
    cands = []
    degenerate = False
    if method in ("shooting", "both"):
        c, degenerate = shooting_candidates(model, x.r, y.r, dth, tol, n_scan)
        cands.extend(c)
    if method in ("quadrature", "both"):
        from .clairaut import quadrature_candidates

        cands.extend(quadrature_candidates(model, x.r, y.r, dth))
    if not cands:
        raise SolverFailure(
            f"no connecting geodesic found from {x} to {y} (dtheta={dth:.6g}, method={method})"
        )
    best = min(c[0] for c in cands)
    tie = max(tie_rel * best, 10.0 * tol)
    keep = sorted((c for c in cands if c[0] <= best + tie), key=lambda c: (c[0], c[1]))
    dirs, lens = [], []
    for length, phi in keep:
        if any(abs(phi - q) < 1e-9 for q in dirs):
            continue
        dirs.append(phi)
        lens.append(length)
    if abs(dth - math.pi) <= 1e-13:
        for phi, length in list(zip(dirs, lens)):
            if 1e-12 < phi < math.pi - 1e-12:
                dirs.append(-phi)
                lens.append(length)
    saturated = degenerate or len(dirs) > max_minimizers
    dirs, lens = dirs[:max_minimizers], lens[:max_minimizers]
    dirs = [sign * d if abs(abs(d) - math.pi) > 1e-15 else d for d in dirs]
    return DistanceResult(best, x, y, tuple(dirs), tuple(lens), saturated, method, model)


def _pole_distance(model, x, y, px, py, max_minimizers):
    L = model.length
    if px and py:
        if px == py:
            return DistanceResult(0.0, x, y, (), (), False, "pole", model)
        dirs = tuple(TWO_PI * k / max_minimizers for k in range(max_minimizers))
        return DistanceResult(L, x, y, dirs, (L,) * len(dirs), True, "pole", model,
                              from_pole=True)
    if px:
        d = y.r if px == "p" else L - y.r
        # the other meridian through the far pole has length 4a - d
        return DistanceResult(d, x, y, (y.theta,), (d,), False, "pole", model, from_pole=True)
    d = x.r if py == "p" else L - x.r
    phi = math.pi if py == "p" else 0.0
    return DistanceResult(d, x, y, (phi,), (d,), False, "pole", model)


def dist(model, x, y, tol=DEFAULT_TOL, **kw) -> float:
    return distance(model, x, y, tol, **kw).distance


# ---------------------------------------------------------------------------
# angles


def direction_candidates(model: SurfaceModel, vertex: SurfacePoint, target: SurfacePoint,
                         tol: float = DEFAULT_TOL):
    """Initial directions of all minimisers from ``vertex`` to ``target``.

    Off the poles a direction is the angle ``phi`` in ``(-pi, pi]``; at a
    pole it is the departure angle ``theta`` of the meridian.
    """
    if vertex.pole(model) is None and target.pole(model) is None and \
            abs(vertex.r - target.r) < 1e-15 and vertex.theta == target.theta:
        return []
    res = distance(model, vertex, target, tol)
    return list(res.directions)


def _angle_between(a: float, b: float) -> float:
    d = abs(math.remainder(a - b, TWO_PI))
    return min(d, math.pi)


def angle_candidates(model, vertex, toA, toB, tol=DEFAULT_TOL):
    da = direction_candidates(model, vertex, toA, tol)
    db = direction_candidates(model, vertex, toB, tol)
    return sorted({round(_angle_between(a, b), 15) for a in da for b in db})


def angle_at(model: SurfaceModel, vertex: SurfacePoint, toA: SurfacePoint, toB: SurfacePoint,
             tol: float = DEFAULT_TOL) -> float:
    """Angle at ``vertex`` between the first-listed minimisers to ``toA`` and ``toB``."""
    da = direction_candidates(model, vertex, toA, tol)
    db = direction_candidates(model, vertex, toB, tol)
    if not da or not db:
        return 0.0
    if toA == toB:
        return 0.0
    return _angle_between(da[0], db[0])


# ---------------------------------------------------------------------------
# cut locus


@dataclass(frozen=True)
class CutWitness:
    phi: float
    t_cut: float
    r: float
    theta: float
    conjugate: bool
    multiplicity: int


@dataclass(frozen=True)
class CutLocusResult:
    base: SurfacePoint
    kind: str
    arc_r_range: Optional[tuple]
    witness_points: tuple
    max_theta_deviation: float

    def to_dict(self) -> dict:
        return {
            "base": [self.base.r, self.base.theta],
            "kind": self.kind,
            "arc_r_range": list(self.arc_r_range) if self.arc_r_range else None,
            "max_theta_deviation": self.max_theta_deviation,
            "witnesses": [
                {"phi": w.phi, "t_cut": w.t_cut, "r": w.r, "theta": w.theta,
                 "conjugate": w.conjugate, "multiplicity": w.multiplicity}
                for w in self.witness_points
            ],
        }

    def to_delimited(self, sep=",") -> str:
        rows = [sep.join(["phi", "t_cut", "r", "theta"])]
        for w in self.witness_points:
            rows.append(sep.join(f"{v:.15g}" for v in (w.phi, w.t_cut, w.r, w.theta)))
        return "\n".join(rows) + "\n"


def _point_along(model, x, phi, t, tol):
    start = GeodesicState.at(model, x.r, x.theta, phi)
    path = integrate_geodesic(model, start, t, tol)
    return path.endpoint


class _MinimalityReferee:
    """``t -> t - d(x, gamma(t))`` for one geodesic from ``x``."""

    def __init__(self, model, x, phi, tol, eps):
        self.model, self.x, self.phi, self.tol, self.eps = model, x, phi, tol, eps
        self.calls = 0

    def excess(self, t):
        self.calls += 1
        z = _point_along(self.model, self.x, self.phi, t, self.tol)
        return t - distance(self.model, self.x, z, self.tol).distance

    def minimal(self, t):
        return self.excess(t) <= self.eps


def cut_time(model: SurfaceModel, x: SurfacePoint, phi: float, tol: float = 1e-11,
             t_tol: float = 1e-6, eps: float = 1e-9):
    """Cut time along the geodesic from ``x`` with initial angle ``phi`` in ``[0, pi]``.

    A cheap candidate (first conjugate point, or the first return to the
    opposite meridian where the geodesic meets its mirror image) is used to
    seed a bracket; the distance solver then decides minimality and the
    bracket is bisected to ``t_tol``.  Returns ``(t_cut, conjugate_flag)``.
    """
    L = model.length
    mp = model.kernel_args
    meridional = phi <= 0.0 or phi >= math.pi
    start = GeodesicState.at(model, x.r, 0.0, phi)
    if meridional:
        t_mirror = math.inf
    else:
        st, t_mirror, _, _ = _shot(mp, x.r, phi, math.pi, L, model.m_max, tol)
        if st != K.OK:
            t_mirror = math.inf
    horizon = min(t_mirror, 3.0 * L) if math.isfinite(t_mirror) else 3.0 * L
    cp = conjugate_point(model, start, horizon * 1.0000001 + 1e-9, tol)
    t_conj = cp.t if cp is not None else math.inf
    t_c = min(t_conj, t_mirror)
    if not math.isfinite(t_c):
        t_c = 2.0 * L
    x0 = SurfacePoint(x.r, 0.0)
    ref = _MinimalityReferee(model, x0, phi, tol, eps)
    conj_first = t_conj <= t_mirror * (1.0 + 1e-12)
    # past a conjugate point the excess t - d grows only cubically, so the
    # referee brackets from below and the conjugate time itself closes it
    delta = 10.0 * t_tol if conj_first else 1e-4 * L
    lo, hi = max(t_c - delta, 0.5 * t_c), t_c + delta
    grow = 0
    lost_early = False
    while not ref.minimal(lo):
        lost_early = True
        hi = lo
        lo = max(lo - 1e-4 * L * 4 ** grow, 0.25 * lo)
        grow += 1
        if grow > 30:
            raise SolverFailure("could not bracket the cut time from below")
    if conj_first and not lost_early:
        return t_conj, True
    grow = 0
    while not lost_early and ref.minimal(hi):
        lo = hi
        hi = hi + delta * 4 ** grow
        grow += 1
        if hi > 4.0 * L:
            raise SolverFailure("geodesic stays minimal past twice the pole distance")
    while hi - lo > t_tol:
        mid = 0.5 * (lo + hi)
        if ref.minimal(mid):
            lo = mid
        else:
            hi = mid
    t_cut = 0.5 * (lo + hi)
    return t_cut, abs(t_cut - t_conj) <= 10 * t_tol


def cut_locus(model: SurfaceModel, x: SurfacePoint, grid: int = 33, tol: float = 1e-11,
              t_tol: float = 1e-6, single_point_tol: Optional[float] = None) -> CutLocusResult:
    """Cut locus of ``x`` on a model with curvature decreasing from pole to equator.

    Directions ``phi`` on a uniform grid over ``[0, pi]`` are followed to
    their cut points (the mirror half ``[-pi, 0]`` gives the reflected
    points).  Extremal cut radii are refined by bounded scalar search.
    """
    L = model.length
    pole = x.pole(model)
    if pole is not None:
        other = SurfacePoint(L if pole == "p" else 0.0, 0.0)
        w = CutWitness(0.0, L, other.r, 0.0, True, -1)
        return CutLocusResult(x, "single-point", (other.r, other.r), (w,), 0.0)
    if not model.monotone_G or model.trend not in ("decreasing", "constant"):
        raise UnsupportedModel(
            f"{model.name}: curvature is not monotone decreasing from the pole to the equator"
        )
    if single_point_tol is None:
        single_point_tol = 1e-5 * L
    opposite = (x.theta + math.pi) % TWO_PI
    x0 = SurfacePoint(x.r, 0.0)

    def witness(phi):
        t, conj = cut_time(model, x0, phi, tol, t_tol)
        z = _point_along(model, x0, phi, t, tol)
        pz = z.pole(model, 1e-9)
        th = math.pi if pz else z.theta
        mult = 0
        if not conj:
            # count minimisers at the foot point on the opposite meridian
            res = distance(model, x0, SurfacePoint(z.r, math.pi), tol, tie_rel=1e-5)
            mult = -1 if res.saturated else res.multiplicity
        return CutWitness(float(phi), float(t), z.r, float((th + x.theta) % TWO_PI), conj, mult)

    phis = np.linspace(0.0, math.pi, grid)
    wit = [witness(p) for p in phis]
    rs = np.array([w.r for w in wit])
    for which in (np.argmin, np.argmax):
        i = int(which(rs))
        if 0 < i < grid - 1:
            sgn = 1.0 if which is np.argmin else -1.0
            res = minimize_scalar(lambda p: sgn * witness(p).r, bounds=(phis[i - 1], phis[i + 1]),
                                  method="bounded", options={"xatol": 1e-6})
            wit.append(witness(float(res.x)))
    wit.sort(key=lambda w: w.phi)
    rs = np.array([w.r for w in wit])
    dev = max(abs(math.remainder(w.theta - opposite, TWO_PI)) for w in wit)
    lo, hi = float(rs.min()), float(rs.max())
    kind = "single-point" if hi - lo <= single_point_tol else "meridian-subarc"
    return CutLocusResult(x, kind, (lo, hi), tuple(wit), float(dev))


# ---------------------------------------------------------------------------
# diameter


def sample_points(model: SurfaceModel, rng: np.random.Generator, size: int):
    r = sample_radii(model, rng, size)
    th = rng.uniform(0.0, TWO_PI, size)
    return [SurfacePoint(float(a), float(b)) for a, b in zip(r, th)]


@dataclass(frozen=True)
class DiameterResult:
    value: float
    witnesses: tuple
    best_sampled: float
    evaluations: int


def diameter(model: SurfaceModel, samples: int = 1000, seed: int = 0, tol: float = DEFAULT_TOL,
             refine: int = 3) -> DiameterResult:
    """Largest distance over area-weighted random pairs, the pole pair and local refinement."""
    L = model.length
    rng = np.random.default_rng(seed)
    xs = sample_points(model, rng, samples)
    ys = sample_points(model, rng, samples)
    vals = np.array([dist(model, a, b, tol) for a, b in zip(xs, ys)])
    order = np.argsort(vals)[::-1][:refine]
    evals = samples
    best_v, best_pair = -1.0, None

    for i in order:
        a, b = xs[i], ys[i]
        dth, _ = separation(a, b)
        z0 = np.array([a.r, b.r, dth])

        def neg(z):
            r1 = min(max(z[0], 0.0), L)
            r2 = min(max(z[1], 0.0), L)
            th = min(max(z[2], 0.0), math.pi)
            return -dist(model, SurfacePoint(r1, 0.0), SurfacePoint(r2, th), tol)

        res = minimize(neg, z0, method="Nelder-Mead",
                       options={"xatol": 1e-7, "fatol": 1e-11, "maxiter": 400})
        evals += res.nfev
        z = res.x
        r1, r2 = min(max(z[0], 0.0), L), min(max(z[1], 0.0), L)
        th = min(max(z[2], 0.0), math.pi)
        v = -res.fun
        if v > best_v:
            best_v, best_pair = v, (SurfacePoint(r1, 0.0), SurfacePoint(r2, th))

    pole_pair = (SurfacePoint(0.0, 0.0), SurfacePoint(L, 0.0))
    pole_val = dist(model, *pole_pair, tol)
    if best_v > pole_val + 1e-9 * L:
        return DiameterResult(best_v, best_pair, best_v, evals)
    return DiameterResult(pole_val, pole_pair, best_v, evals)
