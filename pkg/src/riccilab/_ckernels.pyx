# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels. Mirrors ``_pykernels`` call for call."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, pow, isfinite, INFINITY

cnp.import_array()

cdef enum:
    ST_OK = 0
    ST_CAP = 1
    ST_UNDERFLOW = 2

STATUS_OK = ST_OK
STATUS_CAP = ST_CAP
STATUS_UNDERFLOW = ST_UNDERFLOW

cdef double C_A21 = 1.0 / 5
cdef double C_A31 = 3.0 / 40, C_A32 = 9.0 / 40
cdef double C_A41 = 44.0 / 45, C_A42 = -56.0 / 15, C_A43 = 32.0 / 9
cdef double C_A51 = 19372.0 / 6561, C_A52 = -25360.0 / 2187
cdef double C_A53 = 64448.0 / 6561, C_A54 = -212.0 / 729
cdef double C_A61 = 9017.0 / 3168, C_A62 = -355.0 / 33, C_A63 = 46732.0 / 5247
cdef double C_A64 = 49.0 / 176, C_A65 = -5103.0 / 18656
cdef double C_B1 = 35.0 / 384, C_B3 = 500.0 / 1113, C_B4 = 125.0 / 192
cdef double C_B5 = -2187.0 / 6784, C_B6 = 11.0 / 84
cdef double C_E1 = 71.0 / 57600, C_E3 = -71.0 / 16695, C_E4 = 71.0 / 1920
cdef double C_E5 = -17253.0 / 339200, C_E6 = 22.0 / 525, C_E7 = -1.0 / 40


cdef inline void _rhs(double* y, double* out) noexcept nogil:
    out[0] = y[0] * y[0] + y[1] * y[2]
    out[1] = y[1] * y[1] + y[0] * y[2]
    out[2] = y[2] * y[2] + y[0] * y[1]


cdef inline double _norm(double* y) noexcept nogil:
    return sqrt(y[0] * y[0] + y[1] * y[1] + y[2] * y[2])


cdef void _dp_step(double* y, double* k1, double h, double* yn,
                   double* k7, double* err) noexcept nogil:
    cdef double k2[3]
    cdef double k3[3]
    cdef double k4[3]
    cdef double k5[3]
    cdef double k6[3]
    cdef double tmp[3]
    cdef int i
    for i in range(3):
        tmp[i] = y[i] + h * C_A21 * k1[i]
    _rhs(tmp, k2)
    for i in range(3):
        tmp[i] = y[i] + h * (C_A31 * k1[i] + C_A32 * k2[i])
    _rhs(tmp, k3)
    for i in range(3):
        tmp[i] = y[i] + h * (C_A41 * k1[i] + C_A42 * k2[i] + C_A43 * k3[i])
    _rhs(tmp, k4)
    for i in range(3):
        tmp[i] = y[i] + h * (C_A51 * k1[i] + C_A52 * k2[i] + C_A53 * k3[i]
                             + C_A54 * k4[i])
    _rhs(tmp, k5)
    for i in range(3):
        tmp[i] = y[i] + h * (C_A61 * k1[i] + C_A62 * k2[i] + C_A63 * k3[i]
                             + C_A64 * k4[i] + C_A65 * k5[i])
    _rhs(tmp, k6)
    for i in range(3):
        yn[i] = y[i] + h * (C_B1 * k1[i] + C_B3 * k3[i] + C_B4 * k4[i]
                            + C_B5 * k5[i] + C_B6 * k6[i])
    _rhs(yn, k7)
    for i in range(3):
        err[i] = h * (C_E1 * k1[i] + C_E3 * k3[i] + C_E4 * k4[i]
                      + C_E5 * k5[i] + C_E6 * k6[i] + C_E7 * k7[i])


cdef inline void _sort3(double* y) noexcept nogil:
    cdef double t
    if y[0] > y[1]:
        t = y[0]; y[0] = y[1]; y[1] = t
    if y[1] > y[2]:
        t = y[1]; y[1] = y[2]; y[2] = t
    if y[0] > y[1]:
        t = y[0]; y[0] = y[1]; y[1] = t


def integrate_reaction(y0, t_out, double tol, double cap, double h_min):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] grid = np.ascontiguousarray(
        t_out, dtype=np.float64)
    cdef Py_ssize_t m = grid.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] states = np.empty((m, 3))
    cdef double y[3]
    cdef double yn[3]
    cdef double ym[3]
    cdef double k1[3]
    cdef double k7[3]
    cdef double kk[3]
    cdef double err[3]
    cdef double ee[3]
    cdef double t, h, step, target, ratio, r, scale, grow, lo, hi, mid, span
    cdef Py_ssize_t n = 1
    cdef int i, it
    vals = sorted(float(v) for v in y0)
    for i in range(3):
        y[i] = vals[i]
        states[0, i] = y[i]
    t = grid[0]
    _rhs(y, k1)
    scale = _norm(y)
    if scale < 1.0:
        scale = 1.0
    span = grid[m - 1] - grid[0]
    if span == 0.0:
        span = 1.0
    h = 0.01 / scale
    if span < h:
        h = span
    while n < m:
        target = grid[n]
        while t < target:
            step = h if h < target - t else target - t
            if step < h_min * (fabs(t) if fabs(t) > 1.0 else 1.0):
                return n, states, ST_UNDERFLOW, t, t
            _dp_step(y, k1, step, yn, k7, err)
            ratio = 0.0
            for i in range(3):
                scale = fabs(y[i]) if fabs(y[i]) > fabs(yn[i]) else fabs(yn[i])
                r = fabs(err[i]) / (tol * (scale + 1e-3))
                if r > ratio or not isfinite(r):
                    ratio = r
            if not isfinite(ratio) or ratio > 1.0:
                h = 0.5 * step
                continue
            if _norm(yn) > cap:
                lo = 0.0
                hi = step
                for it in range(60):
                    mid = 0.5 * (lo + hi)
                    _dp_step(y, k1, mid, ym, kk, ee)
                    if _norm(ym) > cap:
                        hi = mid
                    else:
                        lo = mid
                return n, states, ST_CAP, t + hi, t + lo
            if step == target - t:
                t = target
            else:
                t = t + step
            _sort3(yn)
            for i in range(3):
                y[i] = yn[i]
            _rhs(y, k1)
            if ratio == 0.0:
                grow = 5.0
            else:
                grow = 0.9 * pow(ratio, -0.2)
                if grow > 5.0:
                    grow = 5.0
            if step == h:
                h = step * grow
            elif step * grow > h:
                h = step * grow
        for i in range(3):
            states[n, i] = y[i]
        n += 1
    return n, states, ST_OK, t, t


def triangle_violations(d, double tol):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] a = np.ascontiguousarray(
        d, dtype=np.float64)
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double dik, defect
    out = []
    for i in range(n):
        for k in range(i + 1, n):
            dik = a[i, k]
            for j in range(n):
                if j == i or j == k:
                    continue
                defect = dik - a[i, j] - a[j, k]
                if defect > tol:
                    out.append((i, j, k, defect))
    return out


cdef double _distortion(const double[:, ::1] dx, const double[:, ::1] dy,
                        Py_ssize_t* img, Py_ssize_t nx,
                        double bound) noexcept nogil:
    """Max |dy(img i, img j) - dx(i, j)|; stops early once >= bound."""
    cdef double worst = 0.0, v
    cdef Py_ssize_t i, j
    for i in range(nx):
        for j in range(i + 1, nx):
            v = fabs(dy[img[i], img[j]] - dx[i, j])
            if v > worst:
                worst = v
                if worst >= bound:
                    return worst
    return worst


cdef double _covering(const double[:, ::1] dy, Py_ssize_t* img, Py_ssize_t nx,
                      Py_ssize_t ny, double bound) noexcept nogil:
    cdef double worst = 0.0, best, v
    cdef Py_ssize_t y, i
    for y in range(ny):
        best = INFINITY
        for i in range(nx):
            v = dy[y, img[i]]
            if v < best:
                best = v
        if best > worst:
            worst = best
            if worst >= bound:
                return worst
    return worst


def map_nu(dx, dy, image):
    cdef const double[:, ::1] x = np.ascontiguousarray(dx, dtype=np.float64)
    cdef const double[:, ::1] yv = np.ascontiguousarray(dy, dtype=np.float64)
    cdef cnp.ndarray[cnp.intp_t, ndim=1] img = np.ascontiguousarray(
        image, dtype=np.intp)
    cdef Py_ssize_t nx = img.shape[0]
    if nx == 0:
        return 0.0, INFINITY
    cdef Py_ssize_t* p = <Py_ssize_t*> img.data
    return (_distortion(x, yv, p, nx, INFINITY),
            _covering(yv, p, nx, yv.shape[0], INFINITY))


def exhaustive_happrox(dx, dy):
    """Branch-and-bound over all maps in lexicographic order."""
    cdef const double[:, ::1] x = np.ascontiguousarray(dx, dtype=np.float64)
    cdef const double[:, ::1] yv = np.ascontiguousarray(dy, dtype=np.float64)
    cdef Py_ssize_t nx = x.shape[0], ny = yv.shape[0]
    cdef cnp.ndarray[cnp.intp_t, ndim=1] img = np.zeros(nx, dtype=np.intp)
    cdef cnp.ndarray[cnp.intp_t, ndim=1] best_img = np.zeros(nx, dtype=np.intp)
    cdef Py_ssize_t* p = <Py_ssize_t*> img.data
    cdef double best = INFINITY, best_d = INFINITY, best_c = INFINITY
    cdef double dist, cov
    cdef Py_ssize_t pos
    cdef bint found = False
    if nx == 0 or ny == 0:
        return INFINITY, INFINITY, INFINITY, None
    while True:
        dist = _distortion(x, yv, p, nx, best)
        if dist < best:
            cov = _covering(yv, p, nx, ny, best)
            if cov < best:
                best = dist if dist > cov else cov
                best_d = dist
                best_c = cov
                best_img[:] = img
                found = True
        # odometer increment, last index fastest
        pos = nx - 1
        while pos >= 0:
            p[pos] += 1
            if p[pos] < ny:
                break
            p[pos] = 0
            pos -= 1
        if pos < 0:
            break
    if not found:
        return INFINITY, INFINITY, INFINITY, None
    return best, best_d, best_c, tuple(best_img.tolist())
