"""Unit-speed geodesics and Jacobi fields on a surface of revolution.

Geodesics are integrated in the variables ``(r, theta, phi)`` where ``phi`` is
the angle between the velocity and ``d/dr``::

    r' = cos(phi),  theta' = sin(phi)/m(r),  phi' = -m'(r) sin(phi)/m(r)

so ``m(r) sin(phi)`` (the Clairaut constant) is a first integral.  Meridians
(``sin(phi) = 0``) are traced in closed form through the poles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from . import _kernels as K
from .errors import IntegrationFailure, InvalidParameter
from .profiles import SurfaceModel

TWO_PI = 2.0 * math.pi
DEFAULT_TOL = 1e-10
MAX_STEPS = 2_000_000


def _norm_angle(theta: float) -> float:
    t = math.fmod(theta, TWO_PI)
    if t < 0:
        t += TWO_PI
    if t >= TWO_PI:
        t = 0.0
    return t


def tolerances(tol: float):
    """Absolute/relative integrator tolerances for a requested accuracy."""
    return 1e-2 * tol, tol


@dataclass(frozen=True)
class SurfacePoint:
    """A point ``(r, theta)``; at a pole ``theta`` is kept only as a direction label."""

    r: float
    theta: float = 0.0

    def __post_init__(self):
        if not (self.r >= 0.0 and math.isfinite(self.r)):
            raise InvalidParameter(f"radius must be finite and >= 0, got {self.r!r}")
        object.__setattr__(self, "theta", _norm_angle(float(self.theta)))
        object.__setattr__(self, "r", float(self.r))

    def pole(self, model: SurfaceModel, tol: float = 1e-13) -> Optional[str]:
        """``"p"``, ``"q"`` or ``None``."""
        L = model.length
        if self.r <= tol * L:
            return "p"
        if self.r >= L * (1.0 - tol):
            return "q"
        return None

    def check(self, model: SurfaceModel):
        if self.r > model.length * (1 + 1e-12):
            raise InvalidParameter(f"r={self.r} exceeds the pole distance {model.length}")
        return self


@dataclass(frozen=True)
class GeodesicState:
    point: SurfacePoint
    phi: float
    nu: float

    @classmethod
    def at(cls, model: SurfaceModel, r: float, theta: float, phi: float) -> "GeodesicState":
        p = SurfacePoint(r, theta).check(model)
        phi = math.remainder(float(phi), TWO_PI)
        nu = 0.0 if p.pole(model) else float(model.m(p.r)) * math.sin(phi)
        return cls(p, phi, nu)


@dataclass(frozen=True, eq=False)
class GeodesicPath:
    """Sampled unit-speed geodesic.

    ``theta`` is stored unwrapped (continuous in ``t``); use :meth:`points`
    for normalised coordinates.  ``jacobi`` holds ``(y, y')`` samples when the
    path was integrated with the Jacobi equation.
    """

    t: np.ndarray
    r: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    nu: float
    length: float
    pole_crossings: tuple = ()
    meridian: bool = False
    start: Optional[GeodesicState] = None
    jacobi: Optional[np.ndarray] = field(default=None, repr=False)
    _deriv: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def endpoint(self) -> SurfacePoint:
        return SurfacePoint(float(self.r[-1]), float(self.theta[-1]))

    def points(self):
        return [SurfacePoint(float(r), float(th)) for r, th in zip(self.r, self.theta)]

    def at(self, s):
        """Hermite dense output ``(r, theta, phi)`` at arclength(s) ``s``."""
        s = np.asarray(s, dtype=np.float64)
        if self._deriv is None or self.t.size < 2:
            return (np.interp(s, self.t, self.r), np.interp(s, self.t, self.theta),
                    np.interp(s, self.t, self.phi))
        y = np.stack([self.r, self.theta, self.phi], axis=1)
        spl = CubicHermiteSpline(self.t, y, self._deriv[:, :3], axis=0)
        out = spl(s)
        return out[..., 0], out[..., 1], out[..., 2]

    def to_delimited(self, sep: str = ",") -> str:
        lines = [sep.join(["t", "r", "theta", "phi"])]
        for row in zip(self.t, self.r, self.theta, self.phi):
            lines.append(sep.join(f"{v:.15g}" for v in row))
        return "\n".join(lines) + "\n"


def _fold(model: SurfaceModel, rho: np.ndarray, theta0: float, direction: float):
    """Map unfolded meridian arclength to ``(r, theta, phi)``."""
    L = model.length
    # a sample exactly at a pole stays on the sheet it is reached from
    # (the start sample: the sheet it leaves into)
    shift = np.full(rho.shape, -direction * 1e-13 * L)
    shift[:1] = -shift[:1]
    k = np.floor((rho + shift) / L)
    local = np.clip(rho - k * L, 0.0, L)
    odd = (k.astype(np.int64) % 2) == 1
    r = np.where(odd, L - local, local)
    theta = theta0 + math.pi * np.abs(k)
    moving_up = np.where(odd, -direction, direction) > 0
    phi = np.where(moving_up, 0.0, math.pi)
    return r, theta, phi


def _run(model, y0, T, tol, hmax, merid, jacobi, mode=K.RUN, target=0.0, record=True):
    atol, rtol = tolerances(tol)
    y0 = np.asarray(y0, dtype=np.float64)
    st, t, y, ts, Y, F = K.integrate(model.kernel_args, y0, float(T), atol, rtol, float(hmax),
                                     merid, jacobi, mode, float(target), record, MAX_STEPS)
    if st in (K.UNDERFLOW, K.MAX_STEPS):
        raise IntegrationFailure(
            f"integration stopped at t={t:.6g} (status {st}) from r={y0[0]:.6g}, phi={y0[2]:.6g}"
        )
    return st, t, y, ts, Y, F


def _meridian_path(model, start: GeodesicState, T, tol, hmax, jacobi):
    L = model.length
    pole = start.point.pole(model)
    if pole == "p":
        rho0, direction = 0.0, 1.0
    elif pole == "q":
        rho0, direction = L, -1.0
    else:
        rho0 = start.point.r
        direction = 1.0 if math.cos(start.phi) > 0 else -1.0
    theta0 = start.point.theta
    # pole crossings split the integration so they appear as samples
    crossings = []
    j = math.floor(rho0 / L) + 1 if direction > 0 else math.ceil(rho0 / L) - 1
    while True:
        tc = (j * L - rho0) * direction
        if tc <= 1e-14 * L:
            j += int(direction)
            continue
        if tc > T * (1 + 1e-15):
            break
        crossings.append(tc)
        j += int(direction)
    bounds = [0.0] + [c for c in crossings if c < T] + [T]
    state = np.array([rho0, 0.0, 0.0 if direction > 0 else math.pi, 0.0, 1.0])
    t_all, Y_all, F_all = [np.zeros(1)], [state[None, :].copy()], [None]
    first = True
    for a, b in zip(bounds[:-1], bounds[1:]):
        if b - a <= 0:
            continue
        _, t, y, ts, Y, F = _run(model, state, b - a, tol, hmax, True, jacobi)
        if first:
            F_all[0] = F[:1]
            first = False
        t_all.append(ts[1:] + a)
        Y_all.append(Y[1:])
        F_all.append(F[1:])
        state = y.copy()
    ts = np.concatenate(t_all)
    Y = np.concatenate(Y_all)
    Fd = np.concatenate(F_all) if F_all[0] is not None else None
    rho = rho0 + direction * (ts)
    r, theta, phi = _fold(model, rho - 0.0, theta0, direction)
    # exact pole hits
    if Fd is not None:
        deriv = np.zeros((ts.size, 5))
        deriv[:, 0] = np.where(phi == 0.0, 1.0, -1.0)
        deriv[:, 3:] = Fd[:, 3:]
    else:
        deriv = None
    jac = Y[:, 3:].copy() if jacobi else None
    return GeodesicPath(t=ts, r=r, theta=theta, phi=phi, nu=0.0, length=float(T),
                        pole_crossings=tuple(crossings), meridian=True, start=start,
                        jacobi=jac, _deriv=deriv)


def integrate_geodesic(model: SurfaceModel, start: GeodesicState, T: float,
                       tol: float = DEFAULT_TOL, *, max_step: Optional[float] = None,
                       jacobi: bool = False) -> GeodesicPath:
    """Integrate the unit-speed geodesic from ``start`` for arclength ``T``.

    With ``jacobi=True`` the normal Jacobi field ``y'' + G y = 0``,
    ``y(0) = 0, y'(0) = 1`` is integrated alongside and stored on the path.
    """
    if not T > 0:
        raise InvalidParameter("T must be positive")
    hmax = max_step if max_step is not None else model.length / 16.0
    if start.point.pole(model) or abs(math.sin(start.phi)) < 1e-14:
        return _meridian_path(model, start, T, tol, hmax, jacobi)
    y0 = [start.point.r, start.point.theta, start.phi, 0.0, 1.0]
    _, t, y, ts, Y, F = _run(model, y0, T, tol, hmax, False, jacobi)
    return GeodesicPath(t=ts, r=Y[:, 0].copy(), theta=Y[:, 1].copy(), phi=Y[:, 2].copy(),
                        nu=start.nu, length=float(T), start=start,
                        jacobi=Y[:, 3:].copy() if jacobi else None, _deriv=F.copy())


def meridian(model: SurfaceModel, theta0: float = 0.0, tol: float = DEFAULT_TOL) -> GeodesicPath:
    """Closed meridian of length ``4a`` from the pole ``p`` along ``theta0``."""
    start = GeodesicState(SurfacePoint(0.0, theta0), 0.0, 0.0)
    return integrate_geodesic(model, start, 2.0 * model.length, tol)


def clairaut_drift(path: GeodesicPath, model: SurfaceModel) -> float:
    """Largest deviation of ``m(r) sin(phi)`` from the Clairaut constant along ``path``."""
    if path.t.size < 2:
        raise InvalidParameter("path needs at least two samples")
    if path.meridian:
        return 0.0  # phi is exactly 0 or pi by construction
    return float(np.max(np.abs(model.m(path.r) * np.sin(path.phi) - path.nu)))


@dataclass(frozen=True)
class ConjugatePoint:
    t: float
    at_endpoint: bool


def conjugate_point(model: SurfaceModel, start: GeodesicState, T: float,
                    tol: float = DEFAULT_TOL, endpoint_tol: float = 1e-9) -> Optional[ConjugatePoint]:
    """First zero of the Jacobi field along the geodesic from ``start`` in ``(0, T]``."""
    L = model.length
    merid = start.point.pole(model) is not None or abs(math.sin(start.phi)) < 1e-14
    if merid:
        pole = start.point.pole(model)
        if pole == "p":
            y0 = [0.0, 0.0, 0.0, 0.0, 1.0]
        elif pole == "q":
            y0 = [L, 0.0, math.pi, 0.0, 1.0]
        else:
            y0 = [start.point.r, 0.0, 0.0 if math.cos(start.phi) > 0 else math.pi, 0.0, 1.0]
    else:
        y0 = [start.point.r, start.point.theta, start.phi, 0.0, 1.0]
    st, t, y, _, _, _ = _run(model, y0, T, tol, L / 16.0, merid, True, K.JACOBI_ZERO,
                             record=False)
    if st == K.OK:
        return ConjugatePoint(float(t), abs(t - T) <= endpoint_tol)
    if abs(y[3]) <= endpoint_tol:
        return ConjugatePoint(float(T), True)
    return None


def first_conjugate_time(model: SurfaceModel, path: GeodesicPath,
                         tol: float = DEFAULT_TOL) -> Optional[float]:
    """First conjugate time along ``path`` (``None`` if there is none in ``(0, length]``)."""
    start = path.start
    if start is None:
        start = GeodesicState.at(model, float(path.r[0]), float(path.theta[0]), float(path.phi[0]))
    cp = conjugate_point(model, start, path.length, tol)
    return None if cp is None else cp.t
