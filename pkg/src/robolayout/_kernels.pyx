# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the loops in ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport hypot, sqrt, INFINITY, fabs

cnp.import_array()


def arm_pair_mask(double[:, ::1] xy, double[::1] rmin, double[::1] rmax, double[::1] clear):
    cdef Py_ssize_t n = xy.shape[0], i, j
    cdef double d
    out = np.zeros((n, n), dtype=bool)
    cdef cnp.npy_bool[:, ::1] ok = out
    for i in range(n):
        for j in range(i + 1, n):
            d = hypot(xy[i, 0] - xy[j, 0], xy[i, 1] - xy[j, 1])
            if (d >= clear[i] + clear[j] - 1e-12 and d <= rmax[i] + rmax[j] + 1e-12
                    and d >= rmin[i] - rmax[j] - 1e-12 and d >= rmin[j] - rmax[i] - 1e-12):
                ok[i, j] = 1
                ok[j, i] = 1
    return out


def arm_segment_mask(double[:, ::1] xy, double[::1] rmin, double[::1] rmax, double[::1] clear,
                     double[:, ::1] seg_a, double[:, ::1] seg_b):
    cdef Py_ssize_t n = xy.shape[0], m = seg_a.shape[0], i, j
    cdef double abx, aby, len2, t, cx, cy, dmin, da, db, dmax
    out = np.zeros((n, m), dtype=bool)
    cdef cnp.npy_bool[:, ::1] ok = out
    for j in range(m):
        abx = seg_b[j, 0] - seg_a[j, 0]
        aby = seg_b[j, 1] - seg_a[j, 1]
        len2 = abx * abx + aby * aby
        for i in range(n):
            t = ((xy[i, 0] - seg_a[j, 0]) * abx + (xy[i, 1] - seg_a[j, 1]) * aby) / len2
            if t < 0.0:
                t = 0.0
            elif t > 1.0:
                t = 1.0
            cx = seg_a[j, 0] + t * abx
            cy = seg_a[j, 1] + t * aby
            dmin = hypot(xy[i, 0] - cx, xy[i, 1] - cy)
            da = hypot(xy[i, 0] - seg_a[j, 0], xy[i, 1] - seg_a[j, 1])
            db = hypot(xy[i, 0] - seg_b[j, 0], xy[i, 1] - seg_b[j, 1])
            dmax = da if da > db else db
            if dmin >= clear[i] - 1e-12 and dmin <= rmax[i] + 1e-12 and dmax >= rmin[i] - 1e-12:
                ok[i, j] = 1
    return out


def primal_ratio_test(double[::1] x_b, double[::1] lo_b, double[::1] up_b, double[::1] delta,
                      cnp.int64_t[::1] basis, double feas_tol, double piv_tol, bint bland):
    cdef Py_ssize_t m = x_b.shape[0], i, best = -1
    cdef double t_max = INFINITY, t, dl, mag, best_mag = -1.0, best_step = 0.0
    for i in range(m):
        dl = delta[i]
        if dl < -piv_tol:
            t = (x_b[i] - lo_b[i] + feas_tol) / -dl
        elif dl > piv_tol:
            t = (up_b[i] - x_b[i] + feas_tol) / dl
        else:
            continue
        if t < t_max:
            t_max = t
    if t_max == INFINITY:
        return -1, INFINITY, False
    for i in range(m):
        dl = delta[i]
        if dl < -piv_tol:
            t = (x_b[i] - lo_b[i]) / -dl
        elif dl > piv_tol:
            t = (up_b[i] - x_b[i]) / dl
        else:
            continue
        if t <= t_max:
            if bland:
                if best < 0 or basis[i] < basis[best]:
                    best = i
                    best_step = t
            else:
                mag = fabs(dl)
                if mag > best_mag:
                    best_mag = mag
                    best = i
                    best_step = t
    if best_step < 0.0:
        best_step = 0.0
    return int(best), float(best_step), bool(delta[best] > 0)


def dual_ratio_test(double[::1] d, double[::1] alpha, signed char[::1] status, bint want_positive,
                    double piv_tol, double dual_tol):
    cdef Py_ssize_t n = d.shape[0], j, best = -1
    cdef double a, relaxed = INFINITY, r, mag, best_mag = -1.0
    cdef bint elig
    for j in range(n):
        a = alpha[j]
        if status[j] == 0:
            elig = (a < -piv_tol) if want_positive else (a > piv_tol)
        elif status[j] == 1:
            elig = (a > piv_tol) if want_positive else (a < -piv_tol)
        else:
            continue
        if elig:
            r = (fabs(d[j]) + dual_tol) / fabs(a)
            if r < relaxed:
                relaxed = r
    if relaxed == INFINITY:
        return -1
    for j in range(n):
        a = alpha[j]
        if status[j] == 0:
            elig = (a < -piv_tol) if want_positive else (a > piv_tol)
        elif status[j] == 1:
            elig = (a > piv_tol) if want_positive else (a < -piv_tol)
        else:
            continue
        if elig and fabs(d[j]) / fabs(a) <= relaxed:
            mag = fabs(a)
            if mag > best_mag:
                best_mag = mag
                best = j
    return int(best)


def eta_ftran(double[::1] x, cnp.int64_t[::1] rows, double[:, ::1] etas, Py_ssize_t k):
    cdef Py_ssize_t m = x.shape[0], i, j, r
    cdef double xr
    for j in range(k):
        r = rows[j]
        xr = x[r] / etas[j, r]
        if xr != 0.0:
            for i in range(m):
                x[i] -= xr * etas[j, i]
        x[r] = xr


def eta_btran(double[::1] z, cnp.int64_t[::1] rows, double[:, ::1] etas, Py_ssize_t k):
    cdef Py_ssize_t m = z.shape[0], i, j, r
    cdef double s
    for j in range(k - 1, -1, -1):
        r = rows[j]
        s = 0.0
        for i in range(m):
            s += z[i] * etas[j, i]
        s -= z[r] * etas[j, r]
        z[r] = (z[r] - s) / etas[j, r]
