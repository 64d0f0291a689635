"""Hot numeric kernels: profile evaluation and the geodesic/Jacobi integrator.

A profile is passed to every kernel as the tuple ``mp``::

    (kind, lam, p0, p1, L, xs, cs)

``kind`` selects the closed form (or table), ``lam`` is the metric scale,
``p0``/``p1`` are shape parameters, ``L`` the unscaled pole distance and
``xs``/``cs`` a piecewise-cubic table (breakpoints, local power-basis
coefficients ``c3, c2, c1, c0`` per row).  Evaluation extends the profile as an
odd function about both poles, so ``r`` slightly outside ``[0, 2a]`` is safe.

State vector of the integrator: ``(r, theta, phi, y, y')`` where ``y`` is the
normal Jacobi field.  In meridian mode ``r`` is the unfolded arclength
coordinate and ``theta``/``phi`` are frozen.
"""

import math

import numpy as np

from ._jit import njit

SPHERE = 0
EXOTIC = 1
ELLIPSOID = 2
TABLE = 3

_EX_C = math.sqrt(3.0) / 10.0
_EX_W1 = math.sqrt(3.0) / 9.0
_EX_W2 = math.sqrt(3.0) / 3.0

# Dormand-Prince 5(4)
A21 = 1.0 / 5.0
A31 = 3.0 / 40.0
A32 = 9.0 / 40.0
A41 = 44.0 / 45.0
A42 = -56.0 / 15.0
A43 = 32.0 / 9.0
A51 = 19372.0 / 6561.0
A52 = -25360.0 / 2187.0
A53 = 64448.0 / 6561.0
A54 = -212.0 / 729.0
A61 = 9017.0 / 3168.0
A62 = -355.0 / 33.0
A63 = 46732.0 / 5247.0
A64 = 49.0 / 176.0
A65 = -5103.0 / 18656.0
B1 = 35.0 / 384.0
B3 = 500.0 / 1113.0
B4 = 125.0 / 192.0
B5 = -2187.0 / 6784.0
B6 = 11.0 / 84.0
E1 = 71.0 / 57600.0
E3 = -71.0 / 16695.0
E4 = 71.0 / 1920.0
E5 = -17253.0 / 339200.0
E6 = 22.0 / 525.0
E7 = -1.0 / 40.0

# integrator status codes
OK = 0
UNDERFLOW = 1
NO_EVENT = 2
MAX_STEPS = 3

# event modes
RUN = 0
THETA_EVENT = 1
JACOBI_ZERO = 2


@njit(cache=True)
def _sinc(x):
    if abs(x) < 1e-4:
        x2 = x * x
        return 1.0 - x2 / 6.0 + x2 * x2 / 120.0
    return math.sin(x) / x


@njit(cache=True)
def ppoly_eval(xs, cs, x):
    """Value and first three derivatives of a piecewise cubic."""
    n = xs.shape[0] - 1
    i = np.searchsorted(xs, x, side="right") - 1
    if i < 0:
        i = 0
    elif i > n - 1:
        i = n - 1
    d = x - xs[i]
    c3 = cs[i, 0]
    c2 = cs[i, 1]
    c1 = cs[i, 2]
    c0 = cs[i, 3]
    v = ((c3 * d + c2) * d + c1) * d + c0
    d1 = (3.0 * c3 * d + 2.0 * c2) * d + c1
    d2 = 6.0 * c3 * d + 2.0 * c2
    return v, d1, d2, 6.0 * c3


@njit(cache=True)
def profile_eval(mp, r):
    """Return ``(m, m', m'', G)`` of the scaled profile at radius ``r``."""
    kind, lam, p0, p1, L, xs, cs = mp
    s = r / lam
    period = 2.0 * L
    s = s % period
    sign = 1.0
    if s > L:
        s = period - s
        sign = -1.0

    if kind == SPHERE:
        k = math.sqrt(p0)
        if s <= 0.5 * L:
            m = math.sin(k * s) / k
        else:
            m = math.sin(k * (L - s)) / k
        m1 = math.cos(k * s)
        m2 = -p0 * m
        G = p0
    elif kind == EXOTIC:
        if s <= 0.5 * L:
            d = s
            flip = 1.0
        else:
            d = L - s
            flip = -1.0
        x1 = _EX_W1 * d
        x2 = _EX_W2 * d
        s1 = math.sin(x1)
        s2 = math.sin(x2)
        m = _EX_C * (9.0 * s1 + 7.0 * s2)
        m1 = flip * _EX_C * (9.0 * _EX_W1 * math.cos(x1) + 7.0 * _EX_W2 * math.cos(x2))
        m2 = -_EX_C * (9.0 * _EX_W1 * _EX_W1 * s1 + 7.0 * _EX_W2 * _EX_W2 * s2)
        q1 = _sinc(x1)
        q2 = _sinc(x2)
        G = (9.0 * _EX_W1 ** 3 * q1 + 7.0 * _EX_W2 ** 3 * q2) / (
            9.0 * _EX_W1 * q1 + 7.0 * _EX_W2 * q2
        )
    elif kind == ELLIPSOID:
        a = p0
        b = p1
        u, _, _, _ = ppoly_eval(xs, cs, s)
        su = math.sin(u)
        cu = math.cos(u)
        q = math.sqrt(a * a * cu * cu + b * b * su * su)
        q_u = (b * b - a * a) * su * cu / q
        m = a * su
        m1 = a * cu / q
        m2 = (-a * su / q - a * cu * q_u / (q * q)) / q
        G = b * b / (q * q * q * q)
    else:
        m, m1, m2, m3 = ppoly_eval(xs, cs, s)
        if abs(m) > 1e-12 * L:
            G = -m2 / m
        else:
            G = -m3 / m1

    m *= sign
    m2 *= sign
    return lam * m, m1, m2 / lam, G / (lam * lam)


@njit(cache=True)
def profile_eval_many(mp, rs):
    out = np.empty((4, rs.shape[0]))
    for i in range(rs.shape[0]):
        m, m1, m2, G = profile_eval(mp, rs[i])
        out[0, i] = m
        out[1, i] = m1
        out[2, i] = m2
        out[3, i] = G
    return out


@njit(cache=True)
def _rhs(mp, y, merid, out):
    m, m1, m2, G = profile_eval(mp, y[0])
    phi = y[2]
    out[0] = math.cos(phi)
    if merid:
        out[1] = 0.0
        out[2] = 0.0
    else:
        sp = math.sin(phi)
        out[1] = sp / m
        out[2] = -m1 * sp / m
    out[3] = y[4]
    out[4] = -G * y[3]


@njit(cache=True)
def _dp_step(mp, y, h, merid, K, ytmp, ynew, err):
    """One Dormand-Prince step from ``y`` with ``K[0] = f(y)``.

    Writes the 5th-order solution to ``ynew``, ``f(ynew)`` to ``K[6]`` and
    the embedded error estimate to ``err``.
    """
    for i in range(5):
        ytmp[i] = y[i] + h * A21 * K[0, i]
    _rhs(mp, ytmp, merid, K[1])
    for i in range(5):
        ytmp[i] = y[i] + h * (A31 * K[0, i] + A32 * K[1, i])
    _rhs(mp, ytmp, merid, K[2])
    for i in range(5):
        ytmp[i] = y[i] + h * (A41 * K[0, i] + A42 * K[1, i] + A43 * K[2, i])
    _rhs(mp, ytmp, merid, K[3])
    for i in range(5):
        ytmp[i] = y[i] + h * (
            A51 * K[0, i] + A52 * K[1, i] + A53 * K[2, i] + A54 * K[3, i]
        )
    _rhs(mp, ytmp, merid, K[4])
    for i in range(5):
        ytmp[i] = y[i] + h * (
            A61 * K[0, i] + A62 * K[1, i] + A63 * K[2, i] + A64 * K[3, i] + A65 * K[4, i]
        )
    _rhs(mp, ytmp, merid, K[5])
    for i in range(5):
        ynew[i] = y[i] + h * (
            B1 * K[0, i] + B3 * K[2, i] + B4 * K[3, i] + B5 * K[4, i] + B6 * K[5, i]
        )
    _rhs(mp, ynew, merid, K[6])
    for i in range(5):
        err[i] = h * (
            E1 * K[0, i] + E3 * K[2, i] + E4 * K[3, i] + E5 * K[4, i]
            + E6 * K[5, i] + E7 * K[6, i]
        )


@njit(cache=True)
def _err_norm(y, ynew, err, atol, rtol, ncomp):
    acc = 0.0
    for i in range(ncomp):
        sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
        e = err[i] / sc
        acc += e * e
    return math.sqrt(acc / ncomp)


@njit(cache=True)
def _locate(mp, y, h, merid, comp, target, K, ytmp, ynew, err):
    """Find ``tau`` in ``(0, h]`` with ``ynew[comp] == target`` after a step of ``tau``.

    ``y[comp] - target`` and the full-step value must have opposite signs.
    Safeguarded Newton on sub-steps of the same Runge-Kutta formula.
    """
    g0 = y[comp] - target
    lo = 0.0
    hi = h
    _dp_step(mp, y, h, merid, K, ytmp, ynew, err)
    ghi = ynew[comp] - target
    if ghi == 0.0:
        return h
    tau = h * g0 / (g0 - ghi)
    if not (tau > 0.0 and tau < h):
        tau = 0.5 * h
    for _ in range(80):
        _dp_step(mp, y, tau, merid, K, ytmp, ynew, err)
        g = ynew[comp] - target
        if g == 0.0:
            return tau
        if (g > 0.0) == (g0 > 0.0):
            lo = tau
        else:
            hi = tau
        if hi - lo <= 4e-16 * (h + 1.0):
            break
        dg = K[6, comp]
        tn = tau - g / dg if dg != 0.0 else -1.0
        if not (tn > lo and tn < hi):
            tn = 0.5 * (lo + hi)
        if abs(tn - tau) <= 1e-16 * (h + 1.0):
            break
        tau = tn
    _dp_step(mp, y, tau, merid, K, ytmp, ynew, err)
    return tau


@njit(cache=True)
def _grow(ts, Y, F, n):
    cap = ts.shape[0] * 2
    ts2 = np.empty(cap)
    Y2 = np.empty((cap, 5))
    F2 = np.empty((cap, 5))
    ts2[:n] = ts[:n]
    Y2[:n] = Y[:n]
    F2[:n] = F[:n]
    return ts2, Y2, F2


@njit(cache=True)
def integrate(mp, y0, t_end, atol, rtol, hmax, merid, use_jac, mode, target,
              record, max_steps):
    """Adaptive Dormand-Prince integration of the geodesic + Jacobi system.

    Modes: ``RUN`` integrates to ``t_end``; ``THETA_EVENT`` stops when
    ``theta`` first reaches ``target``; ``JACOBI_ZERO`` stops at the first
    downward zero crossing of ``y``.  Returns ``(status, t, y, ts, Y, F)``
    where the last three hold accepted steps (states and derivatives) when
    ``record`` is set.
    """
    y = y0.copy()
    K = np.empty((7, 5))
    ytmp = np.empty(5)
    ynew = np.empty(5)
    err = np.empty(5)
    ncomp = 5 if use_jac else 3
    _rhs(mp, y, merid, K[0])

    if record:
        cap = 64
    else:
        cap = 1
    ts = np.empty(cap)
    Y = np.empty((cap, 5))
    F = np.empty((cap, 5))
    n = 0
    if record:
        ts[0] = 0.0
        Y[0] = y
        F[0] = K[0]
        n = 1

    t = 0.0
    h = min(hmax, t_end, 0.05)
    status = OK
    steps = 0
    done = False
    while not done:
        remaining = t_end - t
        if remaining <= 0.0:
            if mode != RUN:
                status = NO_EVENT
            break
        if steps >= max_steps:
            status = MAX_STEPS
            break
        last = False
        if h >= remaining:
            h = remaining
            last = True
        if h < 1e-15 * (1.0 + abs(t)):
            status = UNDERFLOW
            break
        _dp_step(mp, y, h, merid, K, ytmp, ynew, err)
        en = _err_norm(y, ynew, err, atol, rtol, ncomp)
        steps += 1
        if en <= 1.0:
            hit = False
            if mode == THETA_EVENT and ynew[1] >= target:
                hit = True
                h = _locate(mp, y, h, merid, 1, target, K, ytmp, ynew, err)
                ynew[1] = target
            elif mode == JACOBI_ZERO and y[3] > 0.0 and ynew[3] <= 0.0:
                hit = True
                h = _locate(mp, y, h, merid, 3, 0.0, K, ytmp, ynew, err)
            t = t_end if (last and not hit) else t + h
            for i in range(5):
                y[i] = ynew[i]
                K[0, i] = K[6, i]
            if record:
                if n >= ts.shape[0]:
                    ts, Y, F = _grow(ts, Y, F, n)
                ts[n] = t
                Y[n] = y
                F[n] = K[0]
                n += 1
            if hit:
                break
            if en == 0.0:
                fac = 5.0
            else:
                fac = min(5.0, max(0.2, 0.9 * en ** -0.2))
            h = min(hmax, h * fac)
        else:
            h *= max(0.2, 0.9 * en ** -0.2)
    return status, t, y, ts[:n], Y[:n], F[:n]


@njit(cache=True)
def theta_shot(mp, r0, phi, target, tmax, atol, rtol, hmax, max_steps):
    """Integrate from ``(r0, 0)`` in direction ``phi`` until ``theta == target``.

    Returns ``(status, t, r, phi_end)``.
    """
    y0 = np.empty(5)
    y0[0] = r0
    y0[1] = 0.0
    y0[2] = phi
    y0[3] = 0.0
    y0[4] = 1.0
    st, t, y, _, _, _ = integrate(mp, y0, tmax, atol, rtol, hmax, False, False,
                                  THETA_EVENT, target, False, max_steps)
    return st, t, y[0], y[2]


@njit(cache=True)
def theta_scan(mp, r0, phis, target, mmax, L2, atol, rtol, hmax, max_steps):
    """``theta_shot`` over an array of directions; failed shots give NaN."""
    n = phis.shape[0]
    rs = np.empty(n)
    ts = np.empty(n)
    m0, _, _, _ = profile_eval(mp, r0)
    for k in range(n):
        nu = m0 * math.sin(phis[k])
        tmax = 8.0 * L2 + 1.5 * target * mmax * mmax / nu
        st, t, r, _ = theta_shot(mp, r0, phis[k], target, tmax, atol, rtol, hmax,
                                 max_steps)
        if st == OK:
            rs[k] = r
            ts[k] = t
        else:
            rs[k] = np.nan
            ts[k] = np.nan
    return rs, ts
