# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops for tree growth and inference.

Signatures and results match ``_kernels_py`` exactly; the selection between
the two happens in ``_backend``.
"""
import numpy as np

cimport numpy as cnp
from libc.stdint cimport int32_t, int64_t

cnp.import_array()


def route(const int32_t[::1] feature, const double[::1] threshold,
          const int32_t[::1] left, const int32_t[::1] right,
          const int32_t[::1] slot, const double[:, ::1] X):
    """Leaf slot reached by every row of ``X``."""
    cdef Py_ssize_t n = X.shape[0], i
    cdef int32_t node, f
    out = np.empty(n, dtype=np.int32)
    cdef int32_t[::1] o = out
    with nogil:
        for i in range(n):
            node = 0
            f = feature[0]
            while f >= 0:
                if X[i, f] < threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
                f = feature[node]
            o[i] = slot[node]
    return out


def node_ranges(const double[:, ::1] X, const int64_t[::1] idx):
    """Per-column min and max over the rows listed in ``idx``."""
    cdef Py_ssize_t n = idx.shape[0], d = X.shape[1], i, j
    cdef int64_t r
    cdef double v
    lo_arr = np.empty(d, dtype=np.float64)
    hi_arr = np.empty(d, dtype=np.float64)
    cdef double[::1] lo = lo_arr, hi = hi_arr
    with nogil:
        r = idx[0]
        for j in range(d):
            lo[j] = X[r, j]
            hi[j] = X[r, j]
        for i in range(1, n):
            r = idx[i]
            for j in range(d):
                v = X[r, j]
                if v < lo[j]:
                    lo[j] = v
                elif v > hi[j]:
                    hi[j] = v
    return lo_arr, hi_arr


def class_counts(const double[:, ::1] X, const int64_t[::1] idx,
                 const int64_t[::1] dims, const int64_t[::1] y,
                 Py_ssize_t n_classes, const double[:, ::1] thresholds):
    """``counts[h, c, k]`` = #samples of class k with ``X[:, dims[h]] < thresholds[h, c]``."""
    cdef Py_ssize_t n = idx.shape[0], H = dims.shape[0], C = thresholds.shape[1]
    cdef Py_ssize_t i, h, c
    cdef int64_t r, k
    cdef double v
    out = np.zeros((H, C, n_classes), dtype=np.int64)
    cdef int64_t[:, :, ::1] o = out
    with nogil:
        for i in range(n):
            r = idx[i]
            k = y[r]
            for h in range(H):
                v = X[r, dims[h]]
                for c in range(C):
                    if v < thresholds[h, c]:
                        o[h, c, k] += 1
    return out


def moment_sums(const double[:, ::1] X, const int64_t[::1] idx,
                const int64_t[::1] dims, const double[:, ::1] Y,
                const double[:, ::1] thresholds):
    """Count, sum and sum of squares of targets routed left, per candidate."""
    cdef Py_ssize_t n = idx.shape[0], H = dims.shape[0], C = thresholds.shape[1]
    cdef Py_ssize_t q = Y.shape[1]
    cdef Py_ssize_t i, h, c, j
    cdef int64_t r
    cdef double v, t
    cnt_arr = np.zeros((H, C), dtype=np.int64)
    s_arr = np.zeros((H, C, q), dtype=np.float64)
    ss_arr = np.zeros((H, C, q), dtype=np.float64)
    cdef int64_t[:, ::1] cnt = cnt_arr
    cdef double[:, :, ::1] s = s_arr, ss = ss_arr
    with nogil:
        for i in range(n):
            r = idx[i]
            for h in range(H):
                v = X[r, dims[h]]
                for c in range(C):
                    if v < thresholds[h, c]:
                        cnt[h, c] += 1
                        for j in range(q):
                            t = Y[r, j]
                            s[h, c, j] += t
                            ss[h, c, j] += t * t
    return cnt_arr, s_arr, ss_arr


def ridge_accumulate(const double[:, :, ::1] P, const int32_t[::1] slots,
                     const double[:, ::1] X, double[:, ::1] out):
    """``out[i] += P[slots[i]] @ X[i]`` in place."""
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1], q = P.shape[1]
    cdef Py_ssize_t i, a, b
    cdef int32_t l
    cdef double acc
    with nogil:
        for i in range(n):
            l = slots[i]
            for a in range(q):
                acc = 0.0
                for b in range(d):
                    acc = acc + P[l, a, b] * X[i, b]
                out[i, a] += acc
