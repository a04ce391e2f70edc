"""Compiled random-walk and skip-gram loops."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log
from libc.stdlib cimport malloc, free

include "_rng.pxi"

cnp.import_array()


cdef inline bint _has_edge(const int64_t[::1] indptr, const int64_t[::1] indices,
                           int64_t u, int64_t v) noexcept nogil:
    cdef int64_t lo = indptr[u], hi = indptr[u + 1], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if indices[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    return lo < indptr[u + 1] and indices[lo] == v


def node2vec_walks(const int64_t[::1] indptr, const int64_t[::1] indices,
                   const int64_t[::1] starts, int walk_length, double p, double q,
                   uint64_t seed):
    """Second-order walks by rejection sampling; rows padded with -1."""
    cdef Py_ssize_t n_walks = starts.shape[0]
    out_arr = np.full((n_walks, walk_length), -1, dtype=np.int32)
    cdef int32_t[:, ::1] out = out_arr
    cdef Xoshiro rng
    rng_seed(&rng, seed)
    cdef double w_return = 1.0 / p, w_out = 1.0 / q
    cdef double w_max = max(1.0, max(w_return, w_out))
    cdef bint uniform = (p == 1.0 and q == 1.0)
    cdef Py_ssize_t s
    cdef int step
    cdef int64_t cur, prev, x, deg, base
    cdef double w
    with nogil:
        for s in range(n_walks):
            cur = starts[s]
            out[s, 0] = <int32_t>cur
            prev = -1
            for step in range(1, walk_length):
                base = indptr[cur]
                deg = indptr[cur + 1] - base
                if deg == 0:
                    break
                if prev < 0 or uniform:
                    x = indices[base + rng_below(&rng, deg)]
                else:
                    while True:
                        x = indices[base + rng_below(&rng, deg)]
                        if x == prev:
                            w = w_return
                        elif _has_edge(indptr, indices, prev, x):
                            w = 1.0
                        else:
                            w = w_out
                        if rng_uniform(&rng) * w_max < w:
                            break
                out[s, step] = <int32_t>x
                prev = cur
                cur = x
    return out_arr


def sgns_train(const int32_t[:, ::1] walks, int window, int negatives, int epochs,
               double lr0, double lr_min, const double[::1] alias_prob,
               const int64_t[::1] alias_idx, uint64_t seed,
               float[:, ::1] syn0, float[:, ::1] syn1, bint track_loss=False):
    """Sequential skip-gram with negative sampling, word2vec style.

    Updates ``syn0`` (input vectors) and ``syn1`` (output vectors) in place and
    returns the summed log-loss per epoch (zeros unless ``track_loss``).
    """
    cdef Py_ssize_t n_walks = walks.shape[0], width = walks.shape[1]
    cdef int dim = syn0.shape[1]
    cdef int64_t n_vocab = alias_prob.shape[0]
    losses_arr = np.zeros(max(epochs, 0), dtype=np.float64)
    cdef double[::1] losses = losses_arr
    cdef int64_t[::1] lengths = np.empty(n_walks, dtype=np.int64)
    cdef int64_t total = 0
    cdef Py_ssize_t s, pos, c, lo, hi
    cdef int64_t L
    for s in range(n_walks):
        L = 0
        while L < width and walks[s, L] >= 0:
            L += 1
        lengths[s] = L
        total += L
    total *= epochs
    if total == 0:
        return losses_arr

    cdef Xoshiro rng
    rng_seed(&rng, seed)
    cdef float* neu1e = <float*>malloc(dim * sizeof(float))

    cdef int ep, k, d, b
    cdef int64_t processed = 0, word, ctx, target, j
    cdef float f, g, lr
    cdef double sig, loss
    cdef float* l1
    cdef float* l2
    try:
        with nogil:
            for ep in range(epochs):
                loss = 0.0
                for s in range(n_walks):
                    L = lengths[s]
                    for pos in range(L):
                        lr = <float>(lr0 - (lr0 - lr_min) * (<double>processed / <double>total))
                        if lr < lr_min:
                            lr = <float>lr_min
                        processed += 1
                        word = walks[s, pos]
                        b = <int>rng_below(&rng, window)
                        lo = pos - window + b
                        if lo < 0:
                            lo = 0
                        hi = pos + window - b + 1
                        if hi > L:
                            hi = L
                        for c in range(lo, hi):
                            if c == pos:
                                continue
                            ctx = walks[s, c]
                            l1 = &syn0[ctx, 0]
                            for k in range(dim):
                                neu1e[k] = 0.0
                            for d in range(negatives + 1):
                                if d == 0:
                                    target = word
                                else:
                                    j = rng_below(&rng, n_vocab)
                                    if rng_uniform(&rng) >= alias_prob[j]:
                                        j = alias_idx[j]
                                    target = j
                                    if target == word:
                                        continue
                                l2 = &syn1[target, 0]
                                f = 0.0
                                for k in range(dim):
                                    f = f + l1[k] * l2[k]
                                if f > 10.0:
                                    f = 10.0
                                elif f < -10.0:
                                    f = -10.0
                                sig = 1.0 / (1.0 + exp(-f))
                                if d == 0:
                                    g = <float>((1.0 - sig) * lr)
                                    if track_loss:
                                        loss -= log(sig)
                                else:
                                    g = <float>(-sig * lr)
                                    if track_loss:
                                        loss -= log(1.0 - sig)
                                for k in range(dim):
                                    neu1e[k] = neu1e[k] + g * l2[k]
                                for k in range(dim):
                                    l2[k] = l2[k] + g * l1[k]
                            for k in range(dim):
                                l1[k] = l1[k] + neu1e[k]
                losses[ep] = loss
    finally:
        free(neu1e)
    return losses_arr
