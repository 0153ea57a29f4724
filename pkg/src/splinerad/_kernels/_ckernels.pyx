# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see ``_pykernels`` for the reference semantics."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt, fabs, cos, sin

cnp.import_array()


def de_casteljau(ctrl, t):
    cdef const double[:, :, ::1] c = np.ascontiguousarray(ctrl, dtype=np.float64)
    cdef const double[::1] tt = np.ascontiguousarray(t, dtype=np.float64)
    cdef Py_ssize_t S = c.shape[0], n = tt.shape[0], s, i, k, r, lvl
    out = np.empty((S, n, 2), dtype=np.float64)
    cdef double[:, :, ::1] o = out
    cdef double w[4][2]
    cdef double u, v
    for s in range(S):
        for i in range(n):
            u = tt[i]
            v = 1.0 - u
            for k in range(4):
                w[k][0] = c[s, k, 0]
                w[k][1] = c[s, k, 1]
            for lvl in range(3, 0, -1):
                for r in range(lvl):
                    w[r][0] = v * w[r][0] + u * w[r + 1][0]
                    w[r][1] = v * w[r][1] + u * w[r + 1][1]
            o[s, i, 0] = w[0][0]
            o[s, i, 1] = w[0][1]
    return out


cdef inline double _pseg(double px, double py, double ax, double ay,
                         double bx, double by) nogil:
    cdef double dx = bx - ax, dy = by - ay
    cdef double L2 = dx * dx + dy * dy
    cdef double u
    if L2 == 0.0:
        return sqrt((px - ax) * (px - ax) + (py - ay) * (py - ay))
    u = ((px - ax) * dx + (py - ay) * dy) / L2
    if u < 0.0:
        u = 0.0
    elif u > 1.0:
        u = 1.0
    return sqrt((px - ax - u * dx) ** 2 + (py - ay - u * dy) ** 2)


def polyline_self_intersects(pts, bint closed, double tol):
    arr = np.ascontiguousarray(pts, dtype=np.float64)
    if closed:
        arr = np.vstack([arr, arr[:1]])
    cdef const double[:, ::1] P = arr
    cdef Py_ssize_t m = P.shape[0] - 1, i, j
    cdef double px, py, rx, ry, qx, qy, sx, sy, rxs, t, u, lr, ls, d
    if m < 3:
        return False
    for i in range(m):
        px = P[i, 0]; py = P[i, 1]
        rx = P[i + 1, 0] - px; ry = P[i + 1, 1] - py
        lr = sqrt(rx * rx + ry * ry)
        for j in range(i + 2, m):
            if closed and i == 0 and j == m - 1:
                continue
            qx = P[j, 0]; qy = P[j, 1]
            sx = P[j + 1, 0] - qx; sy = P[j + 1, 1] - qy
            rxs = rx * sy - ry * sx
            if fabs(rxs) <= 1e-300:
                d = _pseg(px, py, qx, qy, qx + sx, qy + sy)
                d = min(d, _pseg(px + rx, py + ry, qx, qy, qx + sx, qy + sy))
                d = min(d, _pseg(qx, qy, px, py, px + rx, py + ry))
                d = min(d, _pseg(qx + sx, qy + sy, px, py, px + rx, py + ry))
                if d <= tol:
                    return True
                continue
            ls = sqrt(sx * sx + sy * sy)
            t = ((qx - px) * sy - (qy - py) * sx) / rxs
            u = ((qx - px) * ry - (qy - py) * rx) / rxs
            if (t >= -tol / max(lr, 1e-300) and t <= 1.0 + tol / max(lr, 1e-300)
                    and u >= -tol / max(ls, 1e-300) and u <= 1.0 + tol / max(ls, 1e-300)):
                return True
    return False


def gauss_corr(A, B, theta):
    cdef const double[:, ::1] a = np.ascontiguousarray(A, dtype=np.float64)
    cdef const double[:, ::1] bt = np.ascontiguousarray(np.asarray(B, dtype=np.float64).T)
    cdef const double[::1] th = np.ascontiguousarray(theta, dtype=np.float64)
    cdef Py_ssize_t n = a.shape[0], m = bt.shape[1], d = a.shape[1], i, j, k
    out = np.zeros((n, m), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef double tk, aik, diff
    cdef double* orow
    cdef const double* brow
    if n == 0 or m == 0:
        return out
    # innermost loop runs over contiguous j without a reduction, so it vectorizes
    for i in range(n):
        orow = &o[i, 0]
        for k in range(d):
            tk = -th[k]
            aik = a[i, k]
            brow = &bt[k, 0]
            for j in range(m):
                diff = aik - brow[j]
                orow[j] += tk * diff * diff
    # vectorized exp is several times faster than scalar libm calls
    return np.exp(out, out=out)


def array_factor(moments, y, k0, sin_t, ef):
    cdef const double complex[:, :, ::1] M = np.ascontiguousarray(moments, dtype=np.complex128)
    cdef const double[::1] yy = np.ascontiguousarray(y, dtype=np.float64)
    cdef const double[::1] kk = np.ascontiguousarray(k0, dtype=np.float64)
    cdef const double[::1] st = np.ascontiguousarray(sin_t, dtype=np.float64)
    cdef const double[::1] e = np.ascontiguousarray(ef, dtype=np.float64)
    cdef Py_ssize_t F = M.shape[0], NP = M.shape[1], T = st.shape[0], f, t, p
    out = np.empty((F, T, 2), dtype=np.complex128)
    cdef double complex[:, :, ::1] o = out
    cdef double complex ax, ay, ph
    cdef double arg
    for f in range(F):
        for t in range(T):
            ax = 0.0
            ay = 0.0
            for p in range(NP):
                arg = kk[f] * yy[p] * st[t]
                ph = cos(arg) + 1j * sin(arg)
                ax = ax + M[f, p, 0] * ph
                ay = ay + M[f, p, 1] * ph
            o[f, t, 0] = ax * e[t]
            o[f, t, 1] = ay * e[t]
    return out
