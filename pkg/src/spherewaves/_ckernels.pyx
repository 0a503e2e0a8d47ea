# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; signatures mirror ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, sin, cos, log, exp, INFINITY, isfinite

cnp.import_array()

cdef double LOG_BIG = 200.0 * 2.302585092994046


def order_table(int ell, theta):
    cdef const double[::1] th = np.ascontiguousarray(theta, dtype=np.float64)
    cdef Py_ssize_t n_t = th.shape[0]
    p_arr = np.empty((n_t, ell + 1))
    d_arr = np.empty((n_t, ell + 1))
    cdef double[:, ::1] p_tab = p_arr
    cdef double[:, ::1] d_tab = d_arr
    cdef double[::1] ca = np.zeros(ell + 2)
    cdef double[::1] cb = np.zeros(ell + 2)
    cdef double[::1] log_norm = np.zeros(ell + 1)
    cdef Py_ssize_t i
    cdef int m, n
    cdef double x, s, inv_s, p, q, tmp, scale, lseed, c, factor, acc
    acc = -0.5 * log(4.0 * 3.141592653589793)
    for m in range(ell + 1):
        if m > 0:
            acc += 0.5 * log((2.0 * m + 1.0) / (2.0 * m))
        log_norm[m] = acc
    for m in range(ell + 1):
        for n in range(m + 2, ell + 1):
            ca[n] = sqrt((4.0 * n * n - 1.0) / (<double>n * n - <double>m * m))
            cb[n] = sqrt(((n - 1.0) * (n - 1.0) - <double>m * m) / (4.0 * (n - 1.0) * (n - 1.0) - 1.0))
        if ell > m:
            c = sqrt((2.0 * ell + 1.0) * (<double>ell * ell - <double>m * m) / (2.0 * ell - 1.0))
        else:
            c = 0.0
        for i in range(n_t):
            x = cos(th[i])
            s = sin(th[i])
            inv_s = 1.0 / s if s > 0.0 else 0.0
            if m == 0:
                lseed = log_norm[0]
            elif s > 0.0:
                lseed = log_norm[m] + m * log(s)
            else:
                p_tab[i, m] = 0.0
                d_tab[i, m] = 0.0
                continue
            if lseed < -300.0:
                scale = lseed
                p = 1.0
            else:
                scale = 0.0
                p = exp(lseed)
            q = 0.0
            if ell > m:
                q = p
                p = sqrt(2.0 * m + 3.0) * x * p
                for n in range(m + 2, ell + 1):
                    tmp = ca[n] * (x * p - cb[n] * q)
                    q = p
                    p = tmp
                    if p > 1e200 or p < -1e200:
                        p *= 1e-200
                        q *= 1e-200
                        scale += LOG_BIG
            if scale != 0.0:
                factor = exp(scale)
                p *= factor
                q *= factor
            p_tab[i, m] = p
            d_tab[i, m] = (ell * x * p - c * q) * inv_s
    return p_arr, d_arr


cdef inline double seg_len(double t0, double f0, double t1, double f1) nogil:
    cdef double sm = sin(0.5 * (t0 + t1))
    return sqrt((t1 - t0) * (t1 - t0) + sm * sm * (f1 - f0) * (f1 - f0))


cdef inline double clip_len(double t0, double f0, double t1, double f1,
                            double cap, bint complement, int* clipped) nogil:
    cdef bint in0, in1
    cdef double u, tc, fc
    if not isfinite(cap):
        if complement:
            return 0.0
        return seg_len(t0, f0, t1, f1)
    in0 = (t0 <= cap) != complement
    in1 = (t1 <= cap) != complement
    if in0 and in1:
        return seg_len(t0, f0, t1, f1)
    if not in0 and not in1:
        return 0.0
    clipped[0] += 1
    u = (cap - t0) / (t1 - t0)
    tc = t0 + u * (t1 - t0)
    fc = f0 + u * (f1 - f0)
    if in0:
        return seg_len(t0, f0, tc, fc)
    return seg_len(tc, fc, t1, f1)


def contour_length(values, theta, double dphi, center_sign, double cap_theta=INFINITY,
                   bint complement=False):
    cdef const double[:, ::1] v = np.ascontiguousarray(values, dtype=np.float64)
    cdef const double[::1] th = np.ascontiguousarray(theta, dtype=np.float64)
    cdef const signed char[:, ::1] cs = np.ascontiguousarray(center_sign, dtype=np.int8)
    cdef Py_ssize_t n_t = v.shape[0], n_p = v.shape[1]
    cdef Py_ssize_t i, j, jn
    cdef double a, b, c, d, t0, dt, piece
    cdef double pt[4]
    cdef double pf[4]
    cdef int k, mask, n_cross, n_seg = 0, n_clipped = 0
    cdef int idx[4]
    cdef double total = 0.0, comp = 0.0, y, tsum
    cdef bint s00, s01, s11, s10
    cdef int pairs[4]
    with nogil:
        for i in range(n_t - 1):
            t0 = th[i]
            dt = th[i + 1] - t0
            for j in range(n_p):
                jn = j + 1 if j + 1 < n_p else 0
                a = v[i, j]
                b = v[i, jn]
                c = v[i + 1, jn]
                d = v[i + 1, j]
                s00 = a > 0
                s01 = b > 0
                s11 = c > 0
                s10 = d > 0
                if s00 == s01 and s01 == s11 and s11 == s10:
                    continue
                n_cross = 0
                if s00 != s01:
                    pt[0] = t0
                    pf[0] = a / (a - b) * dphi
                    idx[n_cross] = 0
                    n_cross += 1
                if s01 != s11:
                    pt[1] = t0 + b / (b - c) * dt
                    pf[1] = dphi
                    idx[n_cross] = 1
                    n_cross += 1
                if s10 != s11:
                    pt[2] = t0 + dt
                    pf[2] = d / (d - c) * dphi
                    idx[n_cross] = 2
                    n_cross += 1
                if s00 != s10:
                    pt[3] = t0 + a / (a - d) * dt
                    pf[3] = 0.0
                    idx[n_cross] = 3
                    n_cross += 1
                if n_cross == 2:
                    pairs[0] = idx[0]
                    pairs[1] = idx[1]
                    k = 1
                else:
                    if (cs[i, j] > 0) == s00:
                        pairs[0] = 0
                        pairs[1] = 1
                        pairs[2] = 2
                        pairs[3] = 3
                    else:
                        pairs[0] = 3
                        pairs[1] = 0
                        pairs[2] = 1
                        pairs[3] = 2
                    k = 2
                for mask in range(k):
                    piece = clip_len(pt[pairs[2 * mask]], pf[pairs[2 * mask]],
                                     pt[pairs[2 * mask + 1]], pf[pairs[2 * mask + 1]],
                                     cap_theta, complement, &n_clipped)
                    if piece > 0.0:
                        n_seg += 1
                        # Kahan summation
                        y = piece - comp
                        tsum = total + y
                        comp = (tsum - total) - y
                        total = tsum
    return total, n_seg, n_clipped
