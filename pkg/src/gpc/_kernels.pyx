# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Lloyd-iteration kernels (same contracts as _kernels_py)."""
import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange

cnp.import_array()


def sq_dists(X, C):
    cdef const double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:, ::1] c = np.ascontiguousarray(C, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], k = c.shape[0], d = x.shape[1]
    out = np.empty((n, k), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j, t
    cdef double acc, diff
    with nogil:
        for i in prange(n, schedule="static"):
            for j in range(k):
                acc = 0.0
                for t in range(d):
                    diff = x[i, t] - c[j, t]
                    acc = acc + diff * diff
                o[i, j] = acc
    return out


def assign_nearest(X, C):
    cdef const double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:, ::1] c = np.ascontiguousarray(C, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], k = c.shape[0], d = x.shape[1]
    labels = np.empty(n, dtype=np.int64)
    dist = np.empty(n, dtype=np.float64)
    cdef cnp.int64_t[::1] lab = labels
    cdef double[::1] dd = dist
    cdef Py_ssize_t i, j, t, best
    cdef double acc, diff, bestd
    with nogil:
        for i in prange(n, schedule="static"):
            best = 0
            bestd = 1e308
            for j in range(k):
                acc = 0.0
                for t in range(d):
                    diff = x[i, t] - c[j, t]
                    acc = acc + diff * diff
                if acc < bestd:
                    bestd = acc
                    best = j
            lab[i] = best
            dd[i] = bestd
    return labels, dist


def cluster_sums(X, labels, Py_ssize_t k):
    cdef const double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef const cnp.int64_t[::1] lab = np.ascontiguousarray(labels, dtype=np.int64)
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1]
    counts = np.zeros(k, dtype=np.int64)
    sums = np.zeros((k, d), dtype=np.float64)
    cdef cnp.int64_t[::1] cnt = counts
    cdef double[:, ::1] s = sums
    cdef Py_ssize_t i, t, j
    with nogil:
        for i in range(n):
            j = lab[i]
            cnt[j] += 1
            for t in range(d):
                s[j, t] += x[i, t]
    return counts, sums
