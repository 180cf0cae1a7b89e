# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see ``_kernels_py`` for the reference versions."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, cos, fabs, M_PI

cnp.import_array()


cdef inline double _agm(double a, double b) nogil:
    cdef double an
    cdef int it
    for it in range(64):
        if fabs(a - b) <= 1e-15 * a:
            break
        an = 0.5 * (a + b)
        b = sqrt(a * b)
        a = an
    return 0.5 * (a + b)


def kernel_offdiag(const double[::1] r):
    cdef Py_ssize_t m = r.shape[0], i, j
    out_arr = np.zeros((m, m))
    cdef double[:, ::1] out = out_arr
    cdef double v
    with nogil:
        for i in range(1, m):
            for j in range(i):
                v = 2.0 * M_PI / _agm(r[i] + r[j], r[i] - r[j])
                out[i, j] = v
                out[j, i] = v
    return out_arr


def exchange_moments(const double[::1] r, const cnp.int64_t[::1] deltas, int n_theta=64):
    t, wt = np.polynomial.legendre.leggauss(n_theta)
    theta_arr = 0.5 * np.pi * (t + 1.0)
    wt_arr = wt * np.pi
    nd = deltas.shape[0]
    cos_arr = np.cos(np.outer(deltas, theta_arr)) - 1.0
    cdef double[::1] theta = theta_arr
    cdef double[::1] w = wt_arr
    cdef double[:, ::1] cosd = cos_arr
    cdef Py_ssize_t m = r.shape[0], i, j, q, a
    out_arr = np.zeros((nd, m, m))
    cdef double[:, :, ::1] out = out_arr
    cdef double[::1] cth = np.cos(theta_arr)
    cdef double d2, inv, acc
    cdef Py_ssize_t nq = theta.shape[0]
    with nogil:
        for i in range(m):
            for j in range(i + 1):
                for q in range(nq):
                    d2 = r[i] * r[i] + r[j] * r[j] - 2.0 * r[i] * r[j] * cth[q]
                    if d2 <= 0.0:
                        continue
                    inv = w[q] / sqrt(d2)
                    for a in range(nd):
                        out[a, i, j] += cosd[a, q] * inv
                for a in range(nd):
                    out[a, j, i] = out[a, i, j]
    return out_arr


def pair_energy_grad(const double[:, ::1] x):
    cdef Py_ssize_t n = x.shape[0], i, j
    grad_arr = np.zeros((n, 2))
    cdef double[:, ::1] g = grad_arr
    cdef double e = 0.0, dx, dy, d2, inv, inv3
    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                dx = x[i, 0] - x[j, 0]
                dy = x[i, 1] - x[j, 1]
                d2 = dx * dx + dy * dy
                inv = 1.0 / sqrt(d2)
                inv3 = inv * inv * inv
                e += inv
                g[i, 0] -= dx * inv3
                g[i, 1] -= dy * inv3
                g[j, 0] += dx * inv3
                g[j, 1] += dy * inv3
    return e, grad_arr


def min_pair_distance(const double[:, ::1] x):
    cdef Py_ssize_t n = x.shape[0], i, j
    cdef double best = np.inf, dx, dy, d2
    if n < 2:
        return np.inf
    for i in range(n):
        for j in range(i + 1, n):
            dx = x[i, 0] - x[j, 0]
            dy = x[i, 1] - x[j, 1]
            d2 = dx * dx + dy * dy
            if d2 < best:
                best = d2
    return sqrt(best)
