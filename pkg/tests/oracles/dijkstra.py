"""Graph-distance oracle for the prolate spheroid.

An implicit ``Nu x Ntheta`` grid in the ellipse parameter ``(u, theta)``
(cell-centred in ``u`` so no node sits on a pole, periodic in ``theta``) with
a 16-direction stencil.  Edge weights are Simpson approximations of the metric
length of the coordinate segment.  Dijkstra gives the global basin (length to
~1e-3 and a predecessor path); a local shooting solve on the second-order
geodesic equations with ``scipy.integrate.solve_ivp`` (DOP853) then polishes
the length.
"""

import math

import numba
import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from . import spheroid

STENCIL = np.array([(di, dj) for di in range(-2, 3) for dj in range(-2, 3)
                    if (di, dj) != (0, 0) and math.gcd(abs(di), abs(dj)) == 1], dtype=np.int64)


@numba.njit(cache=True)
def _seg_len(u0, du, dth, a, b):
    tot = 0.0
    for k, w in ((0, 1.0), (1, 4.0), (2, 1.0)):
        u = u0 + 0.5 * k * du
        c, s = math.cos(u), math.sin(u)
        e = a * a * c * c + b * b * s * s
        rr = a * a * s * s
        tot += w * math.sqrt(e * du * du + rr * dth * dth)
    return tot / 6.0


@numba.njit(cache=True)
def _heap_push(heap, pos, key, size, node):
    i = size
    heap[i] = node
    pos[node] = i
    while i > 0:
        p = (i - 1) // 2
        if key[heap[p]] <= key[heap[i]]:
            break
        a, b = heap[p], heap[i]
        heap[p], heap[i] = b, a
        pos[heap[p]] = p
        pos[heap[i]] = i
        i = p
    return size + 1


@numba.njit(cache=True)
def _heap_up(heap, pos, key, i):
    while i > 0:
        p = (i - 1) // 2
        if key[heap[p]] <= key[heap[i]]:
            break
        a, b = heap[p], heap[i]
        heap[p], heap[i] = b, a
        pos[heap[p]] = p
        pos[heap[i]] = i
        i = p


@numba.njit(cache=True)
def _heap_pop(heap, pos, key, size):
    top = heap[0]
    size -= 1
    pos[top] = -2
    if size > 0:
        heap[0] = heap[size]
        pos[heap[0]] = 0
        i = 0
        while True:
            l, r = 2 * i + 1, 2 * i + 2
            m = i
            if l < size and key[heap[l]] < key[heap[m]]:
                m = l
            if r < size and key[heap[r]] < key[heap[m]]:
                m = r
            if m == i:
                break
            a, b = heap[m], heap[i]
            heap[m], heap[i] = b, a
            pos[heap[m]] = m
            pos[heap[i]] = i
            i = m
    return top, size


@numba.njit(cache=True)
def dijkstra_grid(nu, nth, a, b, src, dst, stencil):
    """Shortest path on the implicit grid; returns (length, predecessor array)."""
    n = nu * nth
    key = np.full(n, np.inf)
    pred = np.full(n, -1, dtype=np.int64)
    pos = np.full(n, -1, dtype=np.int64)
    heap = np.empty(n, dtype=np.int64)
    hu = math.pi / nu
    hth = 2.0 * math.pi / nth
    key[src] = 0.0
    size = _heap_push(heap, pos, key, 0, src)
    while size > 0:
        node, size = _heap_pop(heap, pos, key, size)
        if node == dst:
            break
        i, j = node // nth, node % nth
        u0 = (i + 0.5) * hu
        for k in range(stencil.shape[0]):
            ii = i + stencil[k, 0]
            if ii < 0 or ii >= nu:
                continue
            jj = (j + stencil[k, 1]) % nth
            nb = ii * nth + jj
            if pos[nb] == -2:
                continue
            w = _seg_len(u0, stencil[k, 0] * hu, stencil[k, 1] * hth, a, b)
            nk = key[node] + w
            if nk < key[nb]:
                key[nb] = nk
                pred[nb] = node
                if pos[nb] == -1:
                    size = _heap_push(heap, pos, key, size, nb)
                else:
                    _heap_up(heap, pos, key, pos[nb])
    return key[dst], pred


class SpheroidDijkstra:
    def __init__(self, a=1.0, b=2.0, n=2000):
        self.a, self.b = float(a), float(b)
        self.nu, self.nth = n, n

    def node(self, u, th):
        i = int(round(u / (math.pi / self.nu) - 0.5))
        i = min(max(i, 0), self.nu - 1)
        j = int(round((th % (2 * math.pi)) / (2 * math.pi / self.nth))) % self.nth
        return i * self.nth + j

    def coords(self, node):
        i, j = divmod(int(node), self.nth)
        return (i + 0.5) * math.pi / self.nu, j * 2 * math.pi / self.nth

    def graph_distance(self, u1, th1, u2, th2):
        src, dst = self.node(u1, th1), self.node(u2, th2)
        length, pred = dijkstra_grid(self.nu, self.nth, self.a, self.b, src, dst, STENCIL)
        path = [dst]
        while path[-1] != src:
            path.append(int(pred[path[-1]]))
        return float(length), [self.coords(p) for p in reversed(path)]

    # -- local shooting refinement -------------------------------------------------

    def shoot(self, u1, th1, alpha, T):
        a, b = self.a, self.b
        s = spheroid.speed(u1, a, b)
        R = a * math.sin(u1)
        y0 = [u1, th1, math.cos(alpha) / s, math.sin(alpha) / R]
        sol = solve_ivp(spheroid.geodesic_rhs(a, b), (0.0, T), y0, method="DOP853",
                        rtol=1e-13, atol=1e-14)
        return sol.y[:, -1]

    def hit(self, u1, th1, alpha, target, T_max):
        """Arc length and ``u`` where the geodesic first reaches ``theta = target``."""
        a, b = self.a, self.b
        s = spheroid.speed(u1, a, b)
        R = a * math.sin(u1)
        y0 = [u1, th1, math.cos(alpha) / s, math.sin(alpha) / R]

        def reach(t, y):
            return y[1] - target
        reach.terminal = True

        def pole(t, y):
            return math.sin(y[0]) - 1e-9
        pole.terminal = True

        sol = solve_ivp(spheroid.geodesic_rhs(a, b), (0.0, T_max), y0, method="DOP853",
                        rtol=1e-13, atol=1e-14, events=(reach, pole))
        if sol.t_events[0].size == 0:
            return math.nan, math.nan
        return float(sol.t_events[0][0]), float(sol.y_events[0][0][0])

    def refine(self, u1, th1, u2, target, alpha0, g, width=0.3, n=31):
        """Solve ``u(hit) = u2`` in the launch angle.

        Scans ``alpha0 +- width`` plus a coarse sweep of the whole half range and
        polishes every sign change.
        """
        sign = 1.0 if target > th1 else -1.0
        # launch angles pointing the right way in theta, centred on the estimate
        lo, hi = (1e-6, math.pi - 1e-6) if sign > 0 else (-math.pi + 1e-6, -1e-6)
        al = np.clip(alpha0 + np.linspace(-width, width, n), lo, hi)
        al = np.unique(np.concatenate([al, np.linspace(lo, hi, 2 * n)]))
        f = []
        for x in al:
            T, u = self.hit(u1, th1, x, target, 3.0 * g)
            f.append(u - u2)
        sols = []
        for i in range(len(al) - 1):
            if np.isfinite(f[i]) and np.isfinite(f[i + 1]) and f[i] * f[i + 1] <= 0:
                x = brentq(lambda z: self.hit(u1, th1, z, target, 3.0 * g)[1] - u2,
                           al[i], al[i + 1], xtol=1e-15, rtol=1e-15)
                T, u = self.hit(u1, th1, x, target, 3.0 * g)
                sols.append((T, x, abs(u - u2)))
        return sols

    def distance(self, r1, th1, r2, th2):
        """Graph estimate, refined length and diagnostics for points given in ``r``.

        ``th2 - th1`` must not be a multiple of ``2 pi``.
        """
        a, b = self.a, self.b
        u1, u2 = spheroid.u_of_r(r1, a, b), spheroid.u_of_r(r2, a, b)
        g, path = self.graph_distance(u1, th1, u2, th2)
        ths = np.unwrap([p[1] for p in path])
        us = np.array([p[0] for p in path])
        ths = ths - ths[0] + th1
        k = max(2, len(path) // 10)
        du, dth = us[k] - u1, ths[k] - th1
        alpha0 = math.atan2(a * math.sin(u1) * dth, spheroid.speed(u1, a, b) * du)
        target = th2 + 2 * math.pi * round((ths[-1] - th2) / (2 * math.pi))
        if abs(math.remainder(target - th1, 2 * math.pi)) < 1e-12:
            raise ValueError("points on a common meridian are not supported")
        if (target - th1) * alpha0 <= 0 or abs(math.sin(alpha0)) < 1e-6:
            # graph path leaves along a meridian; start from the theta-ward side
            alpha0 = math.copysign(abs(alpha0) if alpha0 else 1e-6, target - th1)
        # the graph fixes the basin; both ways round are polished since a
        # coarse grid can pick the wrong side of a near-antipodal pair
        sols = []
        for tg in (target, target - math.copysign(2 * math.pi, target - th1)):
            a0 = alpha0 if tg == target else -alpha0
            sols += [s for s in self.refine(u1, th1, u2, tg, a0, g)
                     if abs(s[0] - g) < 5e-2 * max(g, 1.0)]
        if not sols:
            raise RuntimeError("local refinement did not converge")
        T, al, res = min(sols)
        return {"graph": g, "refined": T, "alpha": al, "residual": res}
