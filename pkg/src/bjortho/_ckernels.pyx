# cython: language_level=3
"""Compiled kernels. See ``_pykernels`` for the reference semantics."""

import numpy as np
cimport cython


@cython.boundscheck(False)
@cython.wraparound(False)
def triangle_violations(const double[:, ::1] dist, double tol, Py_ssize_t limit):
    cdef Py_ssize_t n = dist.shape[0]
    cdef Py_ssize_t i, j, k, count = 0
    cdef double dij
    out = np.empty((max(limit, 0), 3), dtype=np.int64)
    cdef long long[:, ::1] o = out
    if limit <= 0:
        return out
    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                dij = dist[i, j] - tol
                for k in range(n):
                    if k == i or k == j:
                        continue
                    if dij > dist[i, k] + dist[k, j]:
                        o[count, 0] = i
                        o[count, 1] = j
                        o[count, 2] = k
                        count += 1
                        if count == limit:
                            break
                if count == limit:
                    break
            if count == limit:
                break
    return out[:count]


cdef inline Py_ssize_t _find(Py_ssize_t[::1] parent, Py_ssize_t a) noexcept nogil:
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


@cython.boundscheck(False)
@cython.wraparound(False)
def count_components(const double[:, ::1] dist, const long long[::1] subset, double eps):
    cdef Py_ssize_t m = subset.shape[0]
    cdef Py_ssize_t a, b, ra, rb
    cdef Py_ssize_t components = m
    parent_arr = np.arange(m, dtype=np.intp)
    cdef Py_ssize_t[::1] parent = parent_arr
    with nogil:
        for a in range(m):
            for b in range(a + 1, m):
                if dist[subset[a], subset[b]] <= eps:
                    ra = _find(parent, a)
                    rb = _find(parent, b)
                    if ra != rb:
                        if ra < rb:
                            parent[rb] = ra
                        else:
                            parent[ra] = rb
                        components -= 1
    return components


@cython.boundscheck(False)
@cython.wraparound(False)
def column_max_argmax(const double[:, :] values):
    cdef Py_ssize_t n = values.shape[0], m = values.shape[1]
    cdef Py_ssize_t i, j, best_i
    cdef double best, v
    vmax = np.empty(m, dtype=np.float64)
    arg = np.empty(m, dtype=np.int64)
    cdef double[::1] vm = vmax
    cdef long long[::1] am = arg
    with nogil:
        for j in range(m):
            best = values[0, j]
            best_i = 0
            for i in range(1, n):
                v = values[i, j]
                if v > best:
                    best = v
                    best_i = i
            vm[j] = best
            am[j] = best_i
    return vmax, arg


@cython.boundscheck(False)
@cython.wraparound(False)
def min_second_difference(const double[:, :] values):
    cdef Py_ssize_t n = values.shape[0], m = values.shape[1]
    cdef Py_ssize_t i, j, best_j
    cdef double best, s
    smin = np.empty(n, dtype=np.float64)
    arg = np.empty(n, dtype=np.int64)
    cdef double[::1] sm = smin
    cdef long long[::1] am = arg
    with nogil:
        for i in range(n):
            best = values[i, 0] - 2.0 * values[i, 1] + values[i, 2]
            best_j = 1
            for j in range(2, m - 1):
                s = values[i, j - 1] - 2.0 * values[i, j] + values[i, j + 1]
                if s < best:
                    best = s
                    best_j = j
            sm[i] = best
            am[i] = best_j
    return smin, arg
