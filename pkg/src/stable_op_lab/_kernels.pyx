# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled ray kernels: sums of multilinear samples along +-rays."""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()


cdef inline double _sample1(const double[::1] v, double lo, double h, double y) noexcept nogil:
    cdef double t = (y - lo) / h
    cdef Py_ssize_t n = v.shape[0]
    cdef Py_ssize_t i
    cdef double f
    if t < 0.0 or t > n - 1:
        return 0.0
    i = <Py_ssize_t>floor(t)
    if i >= n - 1:
        i = n - 2
    f = t - i
    return (1.0 - f) * v[i] + f * v[i + 1]


cdef inline double _sample2(const double[:, ::1] v, double lo0, double lo1, double h,
                            double y0, double y1) noexcept nogil:
    cdef double t0 = (y0 - lo0) / h
    cdef double t1 = (y1 - lo1) / h
    cdef Py_ssize_t n0 = v.shape[0], n1 = v.shape[1]
    cdef Py_ssize_t i, j
    cdef double f, g
    if t0 < 0.0 or t0 > n0 - 1 or t1 < 0.0 or t1 > n1 - 1:
        return 0.0
    i = <Py_ssize_t>floor(t0)
    j = <Py_ssize_t>floor(t1)
    if i >= n0 - 1:
        i = n0 - 2
    if j >= n1 - 1:
        j = n1 - 2
    f = t0 - i
    g = t1 - j
    return ((1 - f) * ((1 - g) * v[i, j] + g * v[i, j + 1])
            + f * ((1 - g) * v[i + 1, j] + g * v[i + 1, j + 1]))


def ray_sum(values, lower, double h, points, theta, radii, weights):
    cdef const double[::1] r = np.ascontiguousarray(radii, dtype=np.float64)
    cdef const double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef const double[::1] th = np.ascontiguousarray(theta, dtype=np.float64).reshape(-1)
    cdef Py_ssize_t nd = np.ndim(values)
    cdef const double[:, ::1] p = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, nd)
    cdef Py_ssize_t m = p.shape[0], nr = r.shape[0], a, k
    out = np.zeros(m)
    cdef double[::1] o = out
    cdef const double[::1] v1
    cdef const double[:, ::1] v2
    cdef double acc, lo0, lo1
    lo = np.asarray(lower, dtype=np.float64).reshape(-1)
    if nd == 1:
        v1 = np.ascontiguousarray(values, dtype=np.float64)
        lo0 = lo[0]
        with nogil:
            for a in range(m):
                acc = 0.0
                for k in range(nr):
                    acc = acc + w[k] * (_sample1(v1, lo0, h, p[a, 0] + r[k] * th[0])
                                        + _sample1(v1, lo0, h, p[a, 0] - r[k] * th[0]))
                o[a] = acc
    elif nd == 2:
        v2 = np.ascontiguousarray(values, dtype=np.float64)
        lo0 = lo[0]
        lo1 = lo[1]
        with nogil:
            for a in range(m):
                acc = 0.0
                for k in range(nr):
                    acc = acc + w[k] * (
                        _sample2(v2, lo0, lo1, h, p[a, 0] + r[k] * th[0], p[a, 1] + r[k] * th[1])
                        + _sample2(v2, lo0, lo1, h, p[a, 0] - r[k] * th[0], p[a, 1] - r[k] * th[1]))
                o[a] = acc
    else:
        raise ValueError("compiled ray_sum handles 1-D and 2-D grids")
    return out


cdef inline void _spread1(const long long[::1] idx, double[:, ::1] A, Py_ssize_t row,
                          double lo, double h, double y, double c) noexcept nogil:
    cdef double t = (y - lo) / h
    cdef Py_ssize_t n = idx.shape[0], i
    cdef double f
    cdef long long col
    if t < 0.0 or t > n - 1:
        return
    i = <Py_ssize_t>floor(t + 1e-12)
    if i >= n - 1:
        i = n - 2
    f = t - i
    if f < 0.0:
        f = 0.0
    elif f > 1.0:
        f = 1.0
    col = idx[i]
    if col >= 0 and f < 1.0:
        A[row, col] += c * (1.0 - f)
    col = idx[i + 1]
    if col >= 0 and f > 0.0:
        A[row, col] += c * f


cdef inline void _spread2(const long long[:, ::1] idx, double[:, ::1] A, Py_ssize_t row,
                          double lo0, double lo1, double h, double y0, double y1,
                          double c) noexcept nogil:
    cdef double t0 = (y0 - lo0) / h
    cdef double t1 = (y1 - lo1) / h
    cdef Py_ssize_t n0 = idx.shape[0], n1 = idx.shape[1], i, j
    cdef double f, g
    cdef long long col
    if t0 < 0.0 or t0 > n0 - 1 or t1 < 0.0 or t1 > n1 - 1:
        return
    i = <Py_ssize_t>floor(t0 + 1e-12)
    j = <Py_ssize_t>floor(t1 + 1e-12)
    if i >= n0 - 1:
        i = n0 - 2
    if j >= n1 - 1:
        j = n1 - 2
    f = min(max(t0 - i, 0.0), 1.0)
    g = min(max(t1 - j, 0.0), 1.0)
    col = idx[i, j]
    if col >= 0:
        A[row, col] += c * (1 - f) * (1 - g)
    col = idx[i, j + 1]
    if col >= 0:
        A[row, col] += c * (1 - f) * g
    col = idx[i + 1, j]
    if col >= 0:
        A[row, col] += c * f * (1 - g)
    col = idx[i + 1, j + 1]
    if col >= 0:
        A[row, col] += c * f * g


def ray_assemble(index, lower, double h, rows, dirs, dir_weights, radii, rad_weights, matrix):
    cdef Py_ssize_t nd = np.ndim(index)
    cdef const long long[:, ::1] rw = np.ascontiguousarray(rows, dtype=np.int64).reshape(-1, nd)
    cdef const double[:, ::1] th = np.ascontiguousarray(np.atleast_2d(dirs), dtype=np.float64)
    cdef const double[::1] wd = np.ascontiguousarray(dir_weights, dtype=np.float64)
    cdef const double[::1] r = np.ascontiguousarray(radii, dtype=np.float64)
    cdef const double[::1] wr = np.ascontiguousarray(rad_weights, dtype=np.float64)
    cdef double[:, ::1] A = matrix
    lo = np.asarray(lower, dtype=np.float64).reshape(-1)
    cdef double lo0 = lo[0]
    cdef double lo1 = lo[1] if nd > 1 else 0.0
    cdef Py_ssize_t nrow = rw.shape[0], ndir = th.shape[0], nr = r.shape[0], a, d, k
    cdef double x0, x1, c
    cdef const long long[::1] i1
    cdef const long long[:, ::1] i2
    if nd == 1:
        i1 = np.ascontiguousarray(index, dtype=np.int64)
        with nogil:
            for a in range(nrow):
                x0 = lo0 + h * rw[a, 0]
                for d in range(ndir):
                    for k in range(nr):
                        c = wd[d] * wr[k]
                        _spread1(i1, A, a, lo0, h, x0 + r[k] * th[d, 0], c)
                        _spread1(i1, A, a, lo0, h, x0 - r[k] * th[d, 0], c)
    elif nd == 2:
        i2 = np.ascontiguousarray(index, dtype=np.int64)
        with nogil:
            for a in range(nrow):
                x0 = lo0 + h * rw[a, 0]
                x1 = lo1 + h * rw[a, 1]
                for d in range(ndir):
                    for k in range(nr):
                        c = wd[d] * wr[k]
                        _spread2(i2, A, a, lo0, lo1, h, x0 + r[k] * th[d, 0], x1 + r[k] * th[d, 1], c)
                        _spread2(i2, A, a, lo0, lo1, h, x0 - r[k] * th[d, 0], x1 - r[k] * th[d, 1], c)
    else:
        raise ValueError("compiled ray_assemble handles 1-D and 2-D grids")
    return matrix
