# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: fused per-node power policy and renewal overlap walk.

Semantics match ``_kernels_py`` exactly; see that module for documentation.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, log

cnp.import_array()

cdef double LOG2E = 1.4426950408889634


cdef inline double _log1p(double x) noexcept nogil:
    # log(1 + x) corrected for the rounding of 1 + x; faster than libm log1p
    cdef double u = 1.0 + x
    if u == 1.0:
        return x
    return log(u) - ((u - 1.0) - x) / u


cdef inline double _power(double h, double g, double d0, double kg, double n0,
                          double s2, double cw, double clamp) noexcept nogil:
    cdef double d, c, a, cc, disc, sq, p
    if h <= 0.0:
        return 0.0
    d = d0 + kg * g
    if d <= 0.0:
        return clamp
    c = LOG2E / d
    a = c - (2.0 * n0 + s2) / h
    cc = n0 * (n0 + s2) / (h * h) - c * (n0 + (1.0 - cw) * s2) / h
    disc = a * a - 4.0 * cc
    if disc < 0.0:
        return 0.0
    sq = sqrt(disc)
    if a >= 0.0:
        p = 0.5 * (a + sq)
    else:
        p = 2.0 * cc / (a - sq)
    if not (p > 0.0):
        return 0.0
    if p > clamp:
        return clamp
    return p


def policy_power(h, g, double d0, double kg, double n0, double s2, double cw,
                 double clamp):
    cdef const double[::1] hv = np.ascontiguousarray(h, dtype=np.float64).ravel()
    cdef const double[::1] gv = np.ascontiguousarray(g, dtype=np.float64).ravel()
    cdef Py_ssize_t n = hv.shape[0], i
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    with nogil:
        for i in range(n):
            ov[i] = _power(hv[i], gv[i], d0, kg, n0, s2, cw, clamp)
    return out.reshape(np.shape(h))


def policy_moments(h, g, w, double d0, double kg, double n0, double s2,
                   double cw, double clamp):
    cdef const double[::1] hv = np.ascontiguousarray(h, dtype=np.float64).ravel()
    cdef const double[::1] gv = np.ascontiguousarray(g, dtype=np.float64).ravel()
    cdef const double[::1] wv = np.ascontiguousarray(w, dtype=np.float64).ravel()
    cdef Py_ssize_t n = hv.shape[0], i
    cdef double p, sp = 0.0, spg = 0.0
    with nogil:
        for i in range(n):
            p = _power(hv[i], gv[i], d0, kg, n0, s2, cw, clamp)
            sp += wv[i] * p
            spg += wv[i] * p * gv[i]
    return sp, spg


def rate_moments(h, g, w, double d0, double kg, double n0, double s2,
                 double cw, double clamp):
    cdef const double[::1] hv = np.ascontiguousarray(h, dtype=np.float64).ravel()
    cdef const double[::1] gv = np.ascontiguousarray(g, dtype=np.float64).ravel()
    cdef const double[::1] wv = np.ascontiguousarray(w, dtype=np.float64).ravel()
    cdef Py_ssize_t n = hv.shape[0], i
    cdef double p, ph, sp = 0.0, spg = 0.0, sc = 0.0, si = 0.0
    with nogil:
        for i in range(n):
            p = _power(hv[i], gv[i], d0, kg, n0, s2, cw, clamp)
            if p == 0.0:
                continue
            ph = p * hv[i]
            sp += wv[i] * p
            spg += wv[i] * p * gv[i]
            sc += wv[i] * _log1p(ph / n0)
            si += wv[i] * _log1p(ph / (n0 + s2))
    return sp, spg, sc * LOG2E, si * LOG2E


def renewal_overlap(start_busy, unit_exp, double mean_on, double mean_off,
                    double horizon):
    cdef const cnp.uint8_t[::1] sb = np.ascontiguousarray(start_busy, dtype=np.uint8)
    cdef const double[:, ::1] ex = np.ascontiguousarray(unit_exp, dtype=np.float64)
    cdef Py_ssize_t n = ex.shape[0], m = ex.shape[1], i, k
    overlap = np.zeros(n, dtype=np.float64)
    overflow = np.zeros(n, dtype=bool)
    cdef double[::1] ov = overlap
    cdef cnp.uint8_t[::1] fv = overflow.view(np.uint8)
    cdef double t, end, acc
    cdef bint busy, done
    with nogil:
        for i in range(n):
            t = 0.0
            acc = 0.0
            busy = sb[i] != 0
            done = False
            for k in range(m):
                if busy:
                    end = t + ex[i, k] * mean_on
                    acc += (end if end < horizon else horizon) - t
                else:
                    end = t + ex[i, k] * mean_off
                if end >= horizon:
                    done = True
                    break
                t = end
                busy = not busy
            ov[i] = acc
            fv[i] = 0 if done else 1
    return overlap, overflow
