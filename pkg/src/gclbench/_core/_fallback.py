"""Pure numpy implementations of the compiled kernels.

Signatures and return types match the Cython modules.  The Louvain, triangle
and GCL pair kernels produce the same numbers as the compiled versions; the
walk and SGNS kernels sample the same distributions from a different random
stream, and SGNS applies updates in mini-batches rather than pair by pair.
"""
from __future__ import annotations

import numpy as np

_SGNS_BATCH = 2048


def node2vec_walks(indptr, indices, starts, walk_length, p, q, seed):
    indptr = np.asarray(indptr, dtype=np.int64)
    indices = np.asarray(indices, dtype=np.int64)
    starts = np.asarray(starts, dtype=np.int64)
    n = indptr.shape[0] - 1
    rng = np.random.default_rng(seed)
    deg = np.diff(indptr)
    # sorted CSR gives globally sorted (u, v) keys, so membership is a searchsorted
    keys = np.repeat(np.arange(n, dtype=np.int64), deg) * n + indices
    w_return, w_out = 1.0 / p, 1.0 / q
    w_max = max(1.0, w_return, w_out)
    uniform = p == 1.0 and q == 1.0

    out = np.full((starts.shape[0], walk_length), -1, dtype=np.int32)
    out[:, 0] = starts
    cur = starts.copy()
    prev = np.full_like(cur, -1)
    alive = deg[cur] > 0
    for step in range(1, walk_length):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        nxt = np.empty(idx.size, dtype=np.int64)
        pending = np.arange(idx.size)
        while pending.size:
            c = cur[idx[pending]]
            x = indices[indptr[c] + (rng.random(pending.size) * deg[c]).astype(np.int64)]
            t = prev[idx[pending]]
            if uniform:
                accept = np.ones(pending.size, dtype=bool)
            else:
                w = np.full(pending.size, w_out)
                key = t * n + x
                pos = np.minimum(np.searchsorted(keys, key), keys.size - 1)
                w[keys[pos] == key] = 1.0
                w[x == t] = w_return
                w[t < 0] = w_max
                accept = rng.random(pending.size) * w_max < w
            nxt[pending[accept]] = x[accept]
            pending = pending[~accept]
        out[idx, step] = nxt
        prev[idx] = cur[idx]
        cur[idx] = nxt
        alive[idx] = deg[nxt] > 0
    return out


def _context_pairs(walk, window, rng):
    L = walk.shape[0]
    shrink = rng.integers(0, window, size=L)
    reach = window - shrink
    centers, contexts = [], []
    for off in range(1, window + 1):
        ok = np.flatnonzero(reach >= off)
        left = ok[ok - off >= 0]
        right = ok[ok + off < L]
        centers.append(walk[left])
        contexts.append(walk[left - off])
        centers.append(walk[right])
        contexts.append(walk[right + off])
    return np.concatenate(centers), np.concatenate(contexts)


def sgns_train(walks, window, negatives, epochs, lr0, lr_min, alias_prob, alias_idx,
               seed, syn0, syn1, track_loss=False):
    walks = np.asarray(walks)
    rng = np.random.default_rng(seed)
    n_vocab = alias_prob.shape[0]
    losses = np.zeros(max(epochs, 0))
    lengths = (walks >= 0).sum(axis=1)
    total = int(lengths.sum()) * epochs
    if total == 0:
        return losses
    processed = 0
    for ep in range(epochs):
        for s in range(walks.shape[0]):
            walk = walks[s, :lengths[s]].astype(np.int64)
            if walk.size < 2:
                processed += walk.size
                continue
            centers, contexts = _context_pairs(walk, window, rng)
            for lo in range(0, centers.size, _SGNS_BATCH):
                cen = centers[lo:lo + _SGNS_BATCH]
                ctx = contexts[lo:lo + _SGNS_BATCH]
                frac = processed + walk.size * lo / max(centers.size, 1)
                lr = max(lr_min, lr0 - (lr0 - lr_min) * frac / total)
                j = rng.integers(0, n_vocab, size=(cen.size, negatives))
                keep = rng.random(j.shape) < alias_prob[j]
                neg = np.where(keep, j, alias_idx[j])
                targets = np.concatenate([cen[:, None], neg], axis=1)
                labels = np.zeros(targets.shape, dtype=np.float32)
                labels[:, 0] = 1.0
                mask = np.ones(targets.shape, dtype=np.float32)
                mask[:, 1:] = neg != cen[:, None]
                l1 = syn0[ctx]
                l2 = syn1[targets]
                f = np.clip(np.einsum("bd,bkd->bk", l1, l2), -10.0, 10.0)
                sig = 1.0 / (1.0 + np.exp(-f))
                if track_loss:
                    ll = np.where(labels > 0, np.log(sig), np.log(1.0 - sig))
                    losses[ep] -= float((ll * mask).sum())
                g = ((labels - sig) * mask * lr).astype(np.float32)
                neu1e = np.einsum("bk,bkd->bd", g, l2)
                np.add.at(syn1, targets.ravel(),
                          (g[:, :, None] * l1[:, None, :]).reshape(-1, l1.shape[1]))
                np.add.at(syn0, ctx, neu1e)
            processed += walk.size
    return losses


def gcl_expected_degrees(logk, x, alpha):
    n = x.shape[0]
    out = np.zeros(n)
    clipped = 0
    off = 0
    for i in range(n - 1):
        seg = logk[off:off + n - i - 1]
        pij = x[i] * x[i + 1:] * np.exp(alpha * seg)
        over = pij > 1.0
        if over.any():
            clipped += int(over.sum())
            pij[over] = 1.0
        out[i] += pij.sum()
        out[i + 1:] += pij
        off += n - i - 1
    return out, clipped


def gcl_block_sums(logk, x, alpha, labels, ell):
    n = x.shape[0]
    out = np.zeros((ell, ell))
    off = 0
    for i in range(n - 1):
        seg = logk[off:off + n - i - 1]
        pij = np.minimum(1.0, x[i] * x[i + 1:] * np.exp(alpha * seg))
        row = np.bincount(labels[i + 1:], weights=pij, minlength=ell)
        a = labels[i]
        out[a, a:] += row[a:]
        out[:a, a] += row[:a]
        off += n - i - 1
    return out


def triangle_count(indptr, indices):
    total = 0
    n = indptr.shape[0] - 1
    for u in range(n):
        nbrs = indices[indptr[u]:indptr[u + 1]]
        for v in nbrs[nbrs > u]:
            vn = indices[indptr[v]:indptr[v + 1]]
            total += np.intersect1d(nbrs[nbrs > v], vn[vn > v], assume_unique=True).size
    return int(total)


def louvain_local_moves(indptr, indices, weights, k, order, labels, tot, m2, max_sweeps):
    indptr = indptr.tolist()
    indices = indices.tolist()
    weights = weights.tolist()
    kl = k.tolist()
    lab = labels.tolist()
    tl = tot.tolist()
    moves = 0
    for _ in range(max_sweeps):
        sweep_moves = 0
        for i in order.tolist():
            own = lab[i]
            ki = kl[i]
            w_to = {}
            touched = []
            for e in range(indptr[i], indptr[i + 1]):
                j = indices[e]
                if j == i:
                    continue
                c = lab[j]
                if c not in w_to:
                    w_to[c] = 0.0
                    touched.append(c)
                w_to[c] += weights[e]
            tl[own] -= ki
            own_gain = w_to.get(own, 0.0) - tl[own] * ki / m2
            best, best_gain = own, own_gain
            for c in touched:
                gain = w_to[c] - tl[c] * ki / m2
                if gain > best_gain or (gain == best_gain and c < best):
                    best, best_gain = c, gain
            if best != own and not best_gain > own_gain + 1e-12 * (ki + 1.0):
                best = own
            tl[best] += ki
            if best != own:
                lab[i] = best
                sweep_moves += 1
        moves += sweep_moves
        if sweep_moves == 0:
            break
    labels[:] = lab
    tot[:] = tl
    return moves
