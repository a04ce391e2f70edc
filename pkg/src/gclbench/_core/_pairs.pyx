"""Compiled O(n^2) pair sums for the Geometric Chung-Lu fit.

Pairs are stored in condensed upper-triangular order (the layout produced by
``scipy.spatial.distance.pdist``); ``logk[pair]`` holds the log of the kernel
base so that the kernel value is ``exp(alpha * logk)``.  Zero kernel bases
must be stored as a large finite negative number, not -inf: this module is
built with -ffast-math so the row loops vectorize.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, fmin
from libc.stdint cimport int64_t

cnp.import_array()


def gcl_expected_degrees(const double[::1] logk, const double[::1] x, double alpha):
    """Return (expected degree per node, number of clipped pairs)."""
    cdef Py_ssize_t n = x.shape[0], i, j
    out_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef const double* row
    cdef double xi, acc, pij
    cdef int64_t off = 0, clipped = 0
    with nogil:
        for i in range(n):
            xi = x[i]
            acc = 0.0
            row = &logk[off] - (i + 1)
            for j in range(i + 1, n):
                pij = xi * x[j] * exp(alpha * row[j])
                clipped += pij > 1.0
                pij = fmin(pij, 1.0)
                acc += pij
                out[j] += pij
            out[i] += acc
            off += n - i - 1
    return out_arr, clipped


def gcl_block_sums(const double[::1] logk, const double[::1] x, double alpha,
                   const int64_t[::1] labels, Py_ssize_t ell):
    """Expected edge mass between every pair of communities (upper triangle)."""
    cdef Py_ssize_t n = x.shape[0], i, j, a, b
    out_arr = np.zeros((ell, ell), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    row_acc_arr = np.zeros(ell, dtype=np.float64)
    cdef double[::1] row_acc = row_acc_arr
    cdef double[::1] buf = np.empty(n, dtype=np.float64)
    cdef const double* row
    cdef double xi
    cdef int64_t off = 0
    with nogil:
        for i in range(n):
            xi = x[i]
            row = &logk[off] - (i + 1)
            for j in range(i + 1, n):
                buf[j] = fmin(xi * x[j] * exp(alpha * row[j]), 1.0)
            for j in range(i + 1, n):
                row_acc[labels[j]] += buf[j]
            a = labels[i]
            for b in range(ell):
                if row_acc[b] != 0.0:
                    if a <= b:
                        out[a, b] += row_acc[b]
                    else:
                        out[b, a] += row_acc[b]
                    row_acc[b] = 0.0
            off += n - i - 1
    return out_arr
