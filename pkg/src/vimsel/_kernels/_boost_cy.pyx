# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled exact-greedy split scan for the boosted-tree engine.

Semantics mirror _boost_np.best_split exactly: candidates are visited in
(feature asc, threshold asc) order and a later candidate wins only on a
strictly larger gain, so ties resolve to the lowest feature index and then
the lowest threshold in both backends.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def best_split(cnp.int32_t[:, ::1] sorted_idx,
               double[:, ::1] x_t,
               double[::1] resid,
               unsigned char[::1] mask,
               Py_ssize_t m,
               double node_sum,
               Py_ssize_t min_leaf):
    """Best variance-reduction split over all features for one tree node."""
    cdef Py_ssize_t p = sorted_idx.shape[0]
    cdef Py_ssize_t n = sorted_idx.shape[1]
    cdef Py_ssize_t j, k, r, c
    cdef Py_ssize_t best_j = -1
    cdef double best_gain = 0.0
    cdef double best_thr = 0.0
    cdef double left_sum, right_sum, gain, xv, prev, base

    if m < 2 * min_leaf or m < 2:
        return (-1, 0.0, 0.0)
    base = node_sum * node_sum / m
    for j in range(p):
        c = 0
        left_sum = 0.0
        prev = 0.0
        for k in range(n):
            r = sorted_idx[j, k]
            if mask[r] == 0:
                continue
            xv = x_t[j, r]
            if c >= min_leaf and (m - c) >= min_leaf and xv > prev:
                right_sum = node_sum - left_sum
                gain = left_sum * left_sum / c + right_sum * right_sum / (m - c) - base
                if gain > best_gain:
                    best_gain = gain
                    best_j = j
                    best_thr = 0.5 * (prev + xv)
            left_sum += resid[r]
            c += 1
            prev = xv
    if best_j < 0:
        return (-1, 0.0, 0.0)
    return (int(best_j), best_thr, best_gain)
