"""The n-dimensional model ``dr^2 + m(r)^2 dTheta^2`` on the n-sphere.

For points ``(r1, u)`` and ``(r2, v)`` with unit directions ``u, v`` the
reflection fixing the 2-plane spanned by ``u`` and ``v`` is an isometry, so
its fixed set (a totally geodesic slice isometric to the surface) contains
every minimal geodesic between them.  All computations reduce to that slice
with angular separation ``2 atan2(|u - v|, |u + v|)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .distances import DistanceResult, distance
from .errors import InvalidParameter, OutOfDomain
from .geodesics import DEFAULT_TOL, SurfacePoint
from .profiles import SurfaceModel, radial_curvature_function, sample_radii

TRIANGLE_SCHEMA = "revgeom.triangle/1"


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    n = float(np.linalg.norm(v))
    if not n > 0:
        raise InvalidParameter("direction must be a non-zero vector")
    return v / n


@dataclass(frozen=True, eq=False)
class NModelPoint:
    """``r`` plus a unit direction in ``R^n``; ``direction`` is ``None`` at a pole."""

    r: float
    direction: Optional[np.ndarray]

    def __post_init__(self):
        if not (self.r >= 0 and math.isfinite(self.r)):
            raise InvalidParameter(f"radius must be finite and >= 0, got {self.r!r}")
        object.__setattr__(self, "r", float(self.r))
        if self.direction is not None:
            object.__setattr__(self, "direction", _unit(self.direction))

    @property
    def dim(self) -> Optional[int]:
        return None if self.direction is None else int(self.direction.size)

    def is_pole(self, model: SurfaceModel, tol: float = 1e-13) -> bool:
        return self.direction is None or self.r <= tol * model.length or \
            self.r >= model.length * (1 - tol)


def direction_angle(u: np.ndarray, v: np.ndarray) -> float:
    """Angle between unit vectors, stable near ``0`` and ``pi``."""
    u, v = _unit(u), _unit(v)
    return 2.0 * math.atan2(float(np.linalg.norm(u - v)), float(np.linalg.norm(u + v)))


def _separation(model, X: NModelPoint, Y: NModelPoint) -> float:
    if X.is_pole(model) or Y.is_pole(model):
        return 0.0
    return direction_angle(X.direction, Y.direction)


def _check_dim(n, *pts):
    if n < 2:
        raise InvalidParameter("n must be >= 2")
    for p in pts:
        if p.direction is not None and p.direction.size != n:
            raise InvalidParameter(f"direction has dimension {p.direction.size}, expected {n}")


def slice_points(model: SurfaceModel, X: NModelPoint, Y: NModelPoint):
    """The two points as ``SurfacePoint``s on the slice (``X`` on ``theta = 0``)."""
    return SurfacePoint(X.r, 0.0), SurfacePoint(Y.r, _separation(model, X, Y))


def nmodel_distance(model: SurfaceModel, n: int, X: NModelPoint, Y: NModelPoint,
                    tol: float = DEFAULT_TOL) -> DistanceResult:
    _check_dim(n, X, Y)
    x, y = slice_points(model, X, Y)
    return distance(model, x, y, tol)


def radial_plane_curvature(model: SurfaceModel, r: float) -> float:
    """Sectional curvature of any radial plane at distance ``r`` from the pole."""
    if not (0.0 < r < model.length):
        raise OutOfDomain(f"r={r} outside (0, {model.length})")
    return float(radial_curvature_function(model)(np.array([float(r)]))[0])


def random_direction(rng: np.random.Generator, n: int) -> np.ndarray:
    return _unit(rng.standard_normal(n))


def random_orthogonal(rng: np.random.Generator, n: int, proper: bool = False) -> np.ndarray:
    """Haar-distributed orthogonal matrix (QR with sign correction)."""
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    q = q * np.sign(np.diag(r))
    if proper and np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


@dataclass(frozen=True)
class TriangleSample:
    """Triangle ``(p, x, y)`` with ``p`` the pole; sides and vertex angles."""

    d_px: float
    d_py: float
    d_xy: float
    angle_p: float
    angle_x: float
    angle_y: float
    n: int = 2
    x: Optional[tuple] = None
    y: Optional[tuple] = None

    @property
    def sides(self):
        return self.d_px, self.d_py, self.d_xy

    @property
    def angles(self):
        return self.angle_p, self.angle_x, self.angle_y

    def to_dict(self) -> dict:
        return {"schema": TRIANGLE_SCHEMA, "n": self.n,
                "sides": {"px": self.d_px, "py": self.d_py, "xy": self.d_xy},
                "angles": {"p": self.angle_p, "x": self.angle_x, "y": self.angle_y},
                "x": list(self.x) if self.x is not None else None,
                "y": list(self.y) if self.y is not None else None}

    @classmethod
    def from_dict(cls, d: dict) -> "TriangleSample":
        s, a = d["sides"], d["angles"]
        return cls(s["px"], s["py"], s["xy"], a["p"], a["x"], a["y"], int(d.get("n", 2)),
                   tuple(d["x"]) if d.get("x") else None, tuple(d["y"]) if d.get("y") else None)


def export_triangles(samples, path=None) -> str:
    text = json.dumps([t.to_dict() for t in samples], indent=2, sort_keys=True)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text


def _angle_between(a: float, b: float) -> float:
    return min(abs(math.remainder(a - b, 2.0 * math.pi)), math.pi)


def slice_triangle(model: SurfaceModel, r1: float, r2: float, dth: float,
                   tol: float = DEFAULT_TOL):
    """Sides and angles of ``(p, (r1, 0), (r2, dth))`` on the surface.

    The side to the pole leaves ``x`` along ``phi = pi``; angles use the
    first-listed minimiser of ``xy``.
    """
    x, y = SurfacePoint(r1, 0.0), SurfacePoint(r2, dth)
    fwd = distance(model, x, y, tol)
    back = distance(model, y, x, tol)
    ax = _angle_between(math.pi, fwd.directions[0]) if fwd.directions else 0.0
    ay = _angle_between(math.pi, back.directions[0]) if back.directions else 0.0
    return fwd.distance, dth, ax, ay


def nmodel_triangle_sample(model: SurfaceModel, n: int, rng_seed, tol: float = DEFAULT_TOL,
                           *, min_pole_distance: float = 1e-2) -> TriangleSample:
    """Area-weighted random triangle with one vertex at the pole ``p``.

    ``rng_seed`` is an integer seed or a ``numpy`` generator.  Samples with a
    vertex within ``min_pole_distance * 2a`` of a pole are redrawn.
    """
    if n < 2:
        raise InvalidParameter("n must be >= 2")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    L = model.length
    band = min_pole_distance * L
    while True:
        r = sample_radii(model, rng, 2)
        if n == 2:
            th = rng.uniform(0.0, 2.0 * math.pi, 2)
            u = np.array([math.cos(th[0]), math.sin(th[0])])
            v = np.array([math.cos(th[1]), math.sin(th[1])])
        else:
            u, v = random_direction(rng, n), random_direction(rng, n)
        if min(r) < band or max(r) > L - band:
            continue
        delta = direction_angle(u, v)
        if delta < 1e-6:
            continue
        break
    X, Y = NModelPoint(float(r[0]), u), NModelPoint(float(r[1]), v)
    d_xy, ap, ax, ay = slice_triangle(model, X.r, Y.r, delta, tol)
    return TriangleSample(X.r, Y.r, d_xy, ap, ax, ay, n,
                          (X.r, *map(float, u)), (Y.r, *map(float, v)))


def restricted_triangle(model: SurfaceModel, n: int, X: NModelPoint, Y: NModelPoint,
                        tol: float = DEFAULT_TOL) -> TriangleSample:
    _check_dim(n, X, Y)
    delta = _separation(model, X, Y)
    d_xy, ap, ax, ay = slice_triangle(model, X.r, Y.r, delta, tol)
    return TriangleSample(X.r, Y.r, d_xy, ap, ax, ay, n)
