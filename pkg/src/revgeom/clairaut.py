"""Distances from the Clairaut first integral.

A geodesic with Clairaut constant ``nu > 0`` oscillates between turning radii
``lo < hi`` (the component of ``{m >= nu}`` containing its start) and

    dtheta/dr = nu / (m sqrt(m^2 - nu^2)),   dt/dr = m / sqrt(m^2 - nu^2)

on each monotone leg.  The substitution ``r = c - h cos(psi)`` with
``c = (lo+hi)/2``, ``h = (hi-lo)/2`` removes the inverse square-root endpoint
singularities, leaving smooth integrands for Gauss-Legendre quadrature.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq

from .profiles import SurfaceModel

_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(40)
_PANELS = np.array([0.0, 0.0625, 0.25, 0.5, 0.75, 0.9375, 1.0])
NU_FLOOR = 1e-3


def _m(model, r):
    return float(model.m(r))


def turning_radii(model: SurfaceModel, r0: float, nu: float):
    """Endpoints of the connected component of ``{m >= nu}`` containing ``r0``."""
    L = model.length
    grid = np.linspace(0.0, L, 257)
    mg = model.m(grid)

    def edge(direction):
        i = int(np.searchsorted(grid, r0))
        if direction < 0:
            j = i - 1
            while j >= 0 and mg[j] >= nu:
                j -= 1
            a, b = (grid[j], min(grid[j + 1], r0)) if j >= 0 else (0.0, r0)
        else:
            j = i
            while j < grid.size and mg[j] >= nu:
                j += 1
            a, b = (max(grid[j - 1], r0), grid[j]) if j < grid.size else (r0, L)
        fa, fb = _m(model, a) - nu, _m(model, b) - nu
        if fa * fb > 0:
            return b if direction < 0 and fb >= 0 else a
        x = brentq(lambda r: _m(model, r) - nu, a, b, xtol=1e-15, rtol=1e-15, maxiter=200)
        # nudge inside so that m(x) >= nu
        step = 1.0 if direction < 0 else -1.0
        k = 0
        while _m(model, x) < nu and k < 64:
            x = np.nextafter(x, x + step * L)
            k += 1
        return float(x)

    return edge(-1), edge(1)


def _leg(model, lo, hi, nu, psi_a, psi_b):
    """(theta advance, length) between two substitution angles."""
    if psi_b <= psi_a:
        return 0.0, 0.0
    c, h = 0.5 * (lo + hi), 0.5 * (hi - lo)
    edges = psi_a + (psi_b - psi_a) * _PANELS
    mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
    half = 0.5 * (edges[1:] - edges[:-1])[:, None]
    psi = (mid + half * _NODES[None, :]).ravel()
    w = (half * _WEIGHTS[None, :]).ravel()
    r = c - h * np.cos(psi)
    m = model.m(r)
    root = np.sqrt(np.maximum((m - nu) * (m + nu), 0.0))
    jac = h * np.sin(psi)
    with np.errstate(divide="ignore", invalid="ignore"):
        dth = np.where(root > 0, nu * jac / (m * root), 0.0)
        dt = np.where(root > 0, m * jac / root, 0.0)
    return float(w @ dth), float(w @ dt)


def _psi(lo, hi, r):
    h = 0.5 * (hi - lo)
    if h <= 0:
        return 0.0
    x = (0.5 * (lo + hi) - r) / h
    return math.acos(min(1.0, max(-1.0, x)))


def leg_integrals(model, r1, r2, nu):
    """``(A, B, F)`` theta integrals and matching lengths for one ``nu``."""
    lo, hi = turning_radii(model, r1, nu)
    p1, p2 = _psi(lo, hi, r1), _psi(lo, hi, r2)
    A = _leg(model, lo, hi, nu, 0.0, p1)
    B = _leg(model, lo, hi, nu, 0.0, p2)
    F = _leg(model, lo, hi, nu, 0.0, math.pi)
    return A, B, F


def pattern_value(A, B, F, up: bool, k: int, which: int):
    """Theta advance (``which=0``) or length (``which=1``) of a turn pattern."""
    a, b, f = A[which], B[which], F[which]
    if k == 0:
        return b - a if up else a - b
    first = f - a if up else a
    odd = k % 2 == 1
    last = (f - b if odd else b) if up else (b if odd else f - b)
    return first + (k - 1) * f + last


def quadrature_candidates(model: SurfaceModel, r1: float, r2: float, dth: float,
                          n_nu: int = 64, nu_floor: float = NU_FLOOR):
    """Connecting geodesics ``(length, phi)`` with ``nu >= nu_floor * max m``.

    ``phi`` is measured as in the shooting solver (``x`` at ``theta = 0``,
    positive towards ``y``).
    """
    L = model.length
    if not (0.0 < r1 < L and 0.0 < r2 < L) or dth <= 0.0:
        return []
    lo_r, hi_r = min(r1, r2), max(r1, r2)
    seg = np.linspace(lo_r, hi_r, 65)
    cap = min(float(np.min(model.m(seg))), _m(model, r1), _m(model, r2))
    nu_min = nu_floor * model.m_max
    nu_max = cap * (1.0 - 1e-9)
    if nu_max <= nu_min:
        return []
    nus = nu_min + (nu_max - nu_min) * (0.5 - 0.5 * np.cos(np.linspace(0.0, math.pi, n_nu)))
    tabs = [leg_integrals(model, r1, r2, nu) for nu in nus]
    fmin = min(t[2][0] for t in tabs)
    kmax = min(int(math.pi / max(fmin, 1e-12)) + 2, 40)

    out = []
    m1 = _m(model, r1)
    for up in (True, False):
        for k in range(kmax + 1):
            if k == 0 and ((up and r2 < r1) or (not up and r2 > r1)):
                continue
            vals = np.array([pattern_value(*t, up, k, 0) for t in tabs]) - dth

            def g(nu):
                return pattern_value(*leg_integrals(model, r1, r2, nu), up, k, 0) - dth

            for i in range(n_nu - 1):
                if vals[i] == 0.0:
                    nu = nus[i]
                elif vals[i] * vals[i + 1] < 0.0:
                    nu = brentq(g, nus[i], nus[i + 1], xtol=1e-15, rtol=1e-15, maxiter=200)
                else:
                    continue
                length = pattern_value(*leg_integrals(model, r1, r2, nu), up, k, 1)
                s = min(1.0, nu / m1)
                phi = math.asin(s) if up else math.pi - math.asin(s)
                out.append((length, phi))
    return out
