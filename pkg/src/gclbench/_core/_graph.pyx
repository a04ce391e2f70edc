"""Compiled graph loops: triangle counting and Louvain local moving."""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t

cnp.import_array()


def triangle_count(const int64_t[::1] indptr, const int64_t[::1] indices):
    """Count triangles u < v < w by merging sorted adjacency lists."""
    cdef Py_ssize_t n = indptr.shape[0] - 1, u
    cdef int64_t a, v, pa, pb, ea, eb, total = 0
    with nogil:
        for u in range(n):
            for a in range(indptr[u], indptr[u + 1]):
                v = indices[a]
                if v <= u:
                    continue
                # common neighbours w > v
                pa = a + 1
                ea = indptr[u + 1]
                pb = indptr[v]
                eb = indptr[v + 1]
                while pb < eb and indices[pb] <= v:
                    pb += 1
                while pa < ea and pb < eb:
                    if indices[pa] < indices[pb]:
                        pa += 1
                    elif indices[pa] > indices[pb]:
                        pb += 1
                    else:
                        total += 1
                        pa += 1
                        pb += 1
    return total


def louvain_local_moves(const int64_t[::1] indptr, const int64_t[::1] indices,
                        const double[::1] weights, const double[::1] k,
                        const int64_t[::1] order, int64_t[::1] labels,
                        double[::1] tot, double m2, int max_sweeps):
    """Move nodes greedily between communities until a sweep makes no move.

    ``labels``/``tot`` are updated in place.  Ties in gain go to the lowest
    community id; a node only leaves its community on a strict improvement.
    Returns the total number of moves.
    """
    cdef Py_ssize_t n = order.shape[0], t, e
    cdef int64_t[::1] seen = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] touched = np.empty(n, dtype=np.int64)
    cdef double[::1] w_to = np.zeros(n, dtype=np.float64)
    cdef int64_t i, j, c, own, best, n_touched, moves = 0, sweep_moves
    cdef int sweep
    cdef double ki, gain, best_gain, own_gain, eps
    with nogil:
        for sweep in range(max_sweeps):
            sweep_moves = 0
            for t in range(n):
                i = order[t]
                own = labels[i]
                ki = k[i]
                n_touched = 0
                for e in range(indptr[i], indptr[i + 1]):
                    j = indices[e]
                    if j == i:
                        continue
                    c = labels[j]
                    if not seen[c]:
                        seen[c] = 1
                        touched[n_touched] = c
                        n_touched += 1
                    w_to[c] += weights[e]
                tot[own] -= ki
                own_gain = w_to[own] - tot[own] * ki / m2
                best = own
                best_gain = own_gain
                for e in range(n_touched):
                    c = touched[e]
                    gain = w_to[c] - tot[c] * ki / m2
                    if gain > best_gain or (gain == best_gain and c < best):
                        best = c
                        best_gain = gain
                eps = 1e-12 * (ki + 1.0)
                if best != own and not (best_gain > own_gain + eps):
                    best = own
                tot[best] += ki
                if best != own:
                    labels[i] = best
                    sweep_moves += 1
                for e in range(n_touched):
                    c = touched[e]
                    seen[c] = 0
                    w_to[c] = 0.0
            moves += sweep_moves
            if sweep_moves == 0:
                break
    return moves
