# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled tree kernels. Arithmetic mirrors ``_kernels_py`` operation for
operation so both backends grow identical trees."""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport calloc, free

cnp.import_array()


def best_split(const double[:, ::1] X, const cnp.intp_t[::1] y,
               const cnp.intp_t[::1] rows, const cnp.intp_t[::1] features,
               Py_ssize_t n_classes):
    cdef Py_ssize_t n = rows.shape[0]
    cdef Py_ssize_t fi, i, c, f, r
    cdef double best_score = -1.0, best_thr = 0.0, score, a, b, mid
    cdef Py_ssize_t best_feat = -1
    cdef long long sq_l, sq_r, cl, cr
    cdef long long *left = <long long *> calloc(n_classes, sizeof(long long))
    cdef long long *total = <long long *> calloc(n_classes, sizeof(long long))
    cdef double[::1] xs
    cdef cnp.intp_t[::1] order
    if left == NULL or total == NULL:
        free(left); free(total)
        raise MemoryError()
    try:
        for i in range(n):
            total[y[rows[i]]] += 1
        xs = np.empty(n, dtype=np.float64)
        for fi in range(features.shape[0]):
            f = features[fi]
            for i in range(n):
                xs[i] = X[rows[i], f]
            order = np.argsort(xs, kind="stable")
            for c in range(n_classes):
                left[c] = 0
            for i in range(n - 1):
                r = rows[order[i]]
                left[y[r]] += 1
                a = xs[order[i]]
                b = xs[order[i + 1]]
                if not a < b:
                    continue
                sq_l = 0
                sq_r = 0
                for c in range(n_classes):
                    cl = left[c]
                    cr = total[c] - cl
                    sq_l += cl * cl
                    sq_r += cr * cr
                score = <double> sq_l / <double> (i + 1) + <double> sq_r / <double> (n - i - 1)
                if score > best_score:
                    mid = (a + b) / 2.0
                    if mid >= b:
                        mid = a
                    best_score = score
                    best_feat = f
                    best_thr = mid
    finally:
        free(left)
        free(total)
    return best_feat, best_thr, best_score


def tree_apply(const double[:, ::1] X, const cnp.intp_t[::1] feature,
               const double[::1] threshold, const cnp.intp_t[::1] left,
               const cnp.intp_t[::1] right):
    cdef Py_ssize_t n = X.shape[0], i, node
    out = np.empty(n, dtype=np.intp)
    cdef cnp.intp_t[::1] leaf = out
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        leaf[i] = node
    return out
