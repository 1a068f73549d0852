"""Pure-Python reference kernels.

Same call signatures as the compiled ``_ckernels`` module. Used when the
extension is not built, or when ``RICCILAB_PURE=1`` is set.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

STATUS_OK = 0
STATUS_CAP = 1
STATUS_UNDERFLOW = 2

# Dormand-Prince 5(4) tableau.
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = (
    9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656)
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)


def _rhs(y):
    a, b, c = y
    return (a * a + b * c, b * b + a * c, c * c + a * b)


def _dp_step(y, k1, h):
    """One Dormand-Prince step. Returns (y_new, k7, error_vector)."""
    y2 = tuple(y[i] + h * _A21 * k1[i] for i in range(3))
    k2 = _rhs(y2)
    y3 = tuple(y[i] + h * (_A31 * k1[i] + _A32 * k2[i]) for i in range(3))
    k3 = _rhs(y3)
    y4 = tuple(y[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
               for i in range(3))
    k4 = _rhs(y4)
    y5 = tuple(y[i] + h * (_A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i]
                           + _A54 * k4[i]) for i in range(3))
    k5 = _rhs(y5)
    y6 = tuple(y[i] + h * (_A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i]
                           + _A64 * k4[i] + _A65 * k5[i]) for i in range(3))
    k6 = _rhs(y6)
    yn = tuple(y[i] + h * (_B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i]
                           + _B5 * k5[i] + _B6 * k6[i]) for i in range(3))
    k7 = _rhs(yn)
    err = tuple(h * (_E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i] + _E5 * k5[i]
                     + _E6 * k6[i] + _E7 * k7[i]) for i in range(3))
    return yn, k7, err


def _norm(y):
    return math.sqrt(y[0] * y[0] + y[1] * y[1] + y[2] * y[2])


def _err_ratio(y, yn, err, tol):
    worst = 0.0
    for i in range(3):
        scale = tol * (max(abs(y[i]), abs(yn[i])) + 1e-3)
        r = abs(err[i]) / scale
        if not math.isfinite(r):
            return math.inf
        if r > worst:
            worst = r
    return worst


def integrate_reaction(y0, t_out, tol, cap, h_min):
    """Adaptive integration of the curvature-operator reaction system.

    ``t_out`` is an increasing grid starting at 0; every grid point is hit
    exactly. Returns ``(n_reached, states, status, t_stop, t_lo)`` where
    ``states[:n_reached]`` are sorted spectra on the grid, ``status`` is one
    of the ``STATUS_*`` codes, ``t_stop`` is the cap-crossing time (or the
    last reached time) and ``t_lo`` the lower end of its bracket.
    """
    t_out = np.asarray(t_out, dtype=float)
    m = t_out.shape[0]
    states = np.empty((m, 3))
    y = tuple(sorted(float(v) for v in y0))
    states[0] = y
    n = 1
    t = float(t_out[0])
    k1 = _rhs(y)
    scale0 = max(_norm(y), 1.0)
    h = min(0.01 / scale0, float(t_out[-1] - t_out[0]) or 1.0)
    while n < m:
        target = float(t_out[n])
        while t < target:
            step = min(h, target - t)
            if step < h_min * max(1.0, abs(t)):
                return n, states, STATUS_UNDERFLOW, t, t
            yn, k7, err = _dp_step(y, k1, step)
            ratio = _err_ratio(y, yn, err, tol)
            if not math.isfinite(ratio) or ratio > 1.0:
                h = 0.5 * step
                continue
            if _norm(yn) > cap:
                lo, hi = 0.0, step
                for _ in range(60):
                    mid = 0.5 * (lo + hi)
                    ym, _k, _e = _dp_step(y, k1, mid)
                    if _norm(ym) > cap:
                        hi = mid
                    else:
                        lo = mid
                return n, states, STATUS_CAP, t + hi, t + lo
            t = target if step == target - t else t + step
            yn = tuple(sorted(yn))
            y = yn
            k1 = _rhs(y)
            grow = 5.0 if ratio == 0.0 else min(5.0, 0.9 * ratio ** -0.2)
            if step == h:
                h = step * grow
            else:
                h = max(h, step * grow)
        states[n] = y
        n += 1
    return n, states, STATUS_OK, t, t


def triangle_violations(d, tol):
    """All (i, j, k, defect) with i < k, j not in {i, k} and
    d[i, k] - d[i, j] - d[j, k] > tol."""
    d = np.asarray(d, dtype=float)
    n = d.shape[0]
    out = []
    for i in range(n):
        for k in range(i + 1, n):
            dik = d[i, k]
            for j in range(n):
                if j == i or j == k:
                    continue
                defect = dik - d[i, j] - d[j, k]
                if defect > tol:
                    out.append((i, j, k, float(defect)))
    return out


def map_nu(dx, dy, image):
    """(distortion, covering) of the index map ``image`` from X into Y."""
    dx = np.asarray(dx, dtype=float)
    dy = np.asarray(dy, dtype=float)
    img = np.asarray(image, dtype=np.intp)
    if img.size == 0:
        return 0.0, math.inf
    sub = dy[np.ix_(img, img)]
    distortion = float(np.max(np.abs(sub - dx))) if img.size > 1 else 0.0
    covering = float(np.max(np.min(dy[:, img], axis=1)))
    return distortion, covering


def exhaustive_happrox(dx, dy, chunk=8192):
    """Minimise max(distortion, covering) over every map X -> Y.

    Maps are enumerated lexicographically; the first minimiser wins ties.
    Returns (nu, distortion, covering, image).
    """
    dx = np.asarray(dx, dtype=float)
    dy = np.asarray(dy, dtype=float)
    nx, ny = dx.shape[0], dy.shape[0]
    best = (math.inf, math.inf, math.inf, None)
    maps = itertools.product(range(ny), repeat=nx)
    iu = np.triu_indices(nx, 1)
    while True:
        block = np.array(list(itertools.islice(maps, chunk)), dtype=np.intp)
        if block.size == 0:
            break
        block = block.reshape(-1, nx)
        if nx > 1:
            sub = dy[block[:, iu[0]], block[:, iu[1]]]
            dist = np.max(np.abs(sub - dx[iu]), axis=1)
        else:
            dist = np.zeros(block.shape[0])
        # covering: for each y, distance to nearest image point
        cov = np.max(np.min(dy[:, block], axis=2), axis=0)
        nu = np.maximum(dist, cov)
        j = int(np.argmin(nu))
        if nu[j] < best[0]:
            best = (float(nu[j]), float(dist[j]), float(cov[j]),
                    tuple(int(v) for v in block[j]))
    return best
