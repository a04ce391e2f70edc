"""Supervised tasks used to validate the divergence score, and summary statistics."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import gammaln
from scipy.stats import rankdata

from .embedding import Embedding
from .graph import Graph, Partition
from .seeding import as_rng

METRICS = ("accuracy", "ami", "auc")


@dataclass
class TaskResult:
    metric: str
    value: float
    replicate: int = 0
    embedding: str = ""
    divergence: float = float("nan")

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if not math.isfinite(self.value):
            raise ValueError("metric value must be finite")


def _coords(emb) -> np.ndarray:
    return emb.coords if isinstance(emb, Embedding) else np.asarray(emb, dtype=np.float64)


def stratified_split(labels, train_frac: float, rng) -> tuple[np.ndarray, np.ndarray]:
    """Per-class shuffled split; every class keeps at least one training node."""
    labels = np.asarray(labels)
    train, test = [], []
    for c in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == c))
        k = min(idx.size, max(1, int(round(train_frac * idx.size))))
        train.append(idx[:k])
        test.append(idx[k:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def knn_predict(train_x, train_y, test_x, k: int) -> np.ndarray:
    """Euclidean k-NN majority vote; ties go to the smallest class id."""
    k = min(k, len(train_y))
    _, nn = cKDTree(train_x).query(test_x, k=k)
    nn = nn.reshape(len(test_x), k)
    votes = train_y[nn]
    n_cls = int(train_y.max()) + 1
    counts = np.zeros((len(test_x), n_cls), dtype=np.int64)
    np.add.at(counts, (np.repeat(np.arange(len(test_x)), k), votes.ravel()), 1)
    return counts.argmax(axis=1)


def knn_classify(emb, labels, train_frac: float = 0.75, k: int = 10, rng=None) -> float:
    """Test accuracy of k-NN on a stratified train/test split."""
    x = _coords(emb)
    labels = labels.labels if isinstance(labels, Partition) else np.asarray(labels)
    classes, y = np.unique(labels, return_inverse=True)
    if classes.size < 2:
        raise ValueError("need at least two classes")
    train, test = stratified_split(y, train_frac, as_rng(rng))
    if test.size == 0:
        raise ValueError("test split is empty")
    pred = knn_predict(x[train], y[train], x[test], k)
    return float(np.mean(pred == y[test]))


def _sq_dists(x, c, x_sq):
    return np.maximum(x_sq[:, None] - 2.0 * x @ c.T + np.sum(c * c, axis=1)[None, :], 0.0)


def kmeans(emb, k: int, rng=None, max_iter: int = 300) -> Partition:
    """k-means++ seeding followed by Lloyd iterations until assignments stop changing."""
    x = _coords(emb)
    n = x.shape[0]
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    rng = as_rng(rng)
    x_sq = np.sum(x * x, axis=1)
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    closest = _sq_dists(x, centers[:1], x_sq)[:, 0]
    for c in range(1, k):
        total = closest.sum()
        i = rng.choice(n, p=closest / total) if total > 0 else rng.integers(n)
        centers[c] = x[i]
        closest = np.minimum(closest, _sq_dists(x, centers[c:c + 1], x_sq)[:, 0])
    assign = None
    for _ in range(max_iter):
        d2 = _sq_dists(x, centers, x_sq)
        new = d2.argmin(axis=1)
        if assign is not None and np.array_equal(new, assign):
            break
        assign = new
        for c in range(k):
            members = assign == c
            if members.any():
                centers[c] = x[members].mean(axis=0)
            else:
                far = int(np.argmax(d2[np.arange(n), assign]))
                centers[c] = x[far]
                assign[far] = c
                d2[far] = 0.0
    return Partition.from_labels(assign)


def contingency(a, b) -> np.ndarray:
    a = a.labels if isinstance(a, Partition) else np.asarray(a)
    b = b.labels if isinstance(b, Partition) else np.asarray(b)
    if a.shape != b.shape:
        raise ValueError("partitions cover different node counts")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)
    return table


def _entropy(counts: np.ndarray, n: int) -> float:
    p = counts[counts > 0] / n
    return float(-np.sum(p * np.log(p)))


def mutual_information(table: np.ndarray) -> float:
    n = table.sum()
    a, b = table.sum(axis=1), table.sum(axis=0)
    nz = table > 0
    nij = table[nz].astype(np.float64)
    outer = np.outer(a, b)[nz].astype(np.float64)
    return float(np.sum(nij / n * np.log(n * nij / outer)))


def expected_mutual_information(table: np.ndarray) -> float:
    """Exact E[MI] under the hypergeometric model with fixed margins."""
    n = int(table.sum())
    a = table.sum(axis=1).astype(np.int64)
    b = table.sum(axis=0).astype(np.int64)
    lg_n = gammaln(n + 1)
    total = 0.0
    for ai in a:
        for bj in b:
            lo = max(1, ai + bj - n)
            hi = min(ai, bj)
            if lo > hi:
                continue
            nij = np.arange(lo, hi + 1, dtype=np.float64)
            log_p = (gammaln(ai + 1) + gammaln(bj + 1) + gammaln(n - ai + 1) + gammaln(n - bj + 1)
                     - lg_n - gammaln(nij + 1) - gammaln(ai - nij + 1) - gammaln(bj - nij + 1)
                     - gammaln(n - ai - bj + nij + 1))
            total += float(np.sum(nij / n * np.log(n * nij / (ai * bj)) * np.exp(log_p)))
    return total


def ami(a, b) -> float:
    """Adjusted mutual information with arithmetic-mean normalisation."""
    table = contingency(a, b)
    n = int(table.sum())
    if table.shape[0] == 1 and table.shape[1] == 1:
        return 1.0
    mi = mutual_information(table)
    emi = expected_mutual_information(table)
    h = 0.5 * (_entropy(table.sum(axis=1), n) + _entropy(table.sum(axis=0), n))
    denom = h - emi
    if abs(denom) < 1e-15:
        return 1.0 if abs(mi - emi) < 1e-15 else 0.0
    return float((mi - emi) / denom)


def community_detection_ami(emb, truth: Partition, rng=None) -> float:
    """k-means with the true community count, scored by AMI against the truth."""
    return ami(kmeans(emb, truth.ell, rng), truth)


def auc(scores_pos, scores_neg) -> float:
    """Mann-Whitney AUC with midranks, so ties count one half."""
    pos = np.asarray(scores_pos, dtype=np.float64)
    neg = np.asarray(scores_neg, dtype=np.float64)
    if pos.size == 0 or neg.size == 0:
        raise ValueError("both score sets must be non-empty")
    ranks = rankdata(np.concatenate([pos, neg]))
    u = ranks[:pos.size].sum() - pos.size * (pos.size + 1) / 2.0
    return float(u / (pos.size * neg.size))


def pearson(xs, ys) -> float:
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("need two equal-length samples of size >= 2")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise ValueError("sample with zero variance")
    return float(np.clip((dx @ dy) / math.sqrt(sxx * syy), -1.0, 1.0))


@dataclass
class VarianceDecomposition:
    ss_t: float
    ss_g: float
    ss_e: float
    r_e: float


def variance_decomposition(scores) -> VarianceDecomposition:
    """Split score variance into between-graph and within-graph (embedding) parts.

    ``scores`` has one row per graph and one column per embedding replicate.
    """
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 2 or s.size == 0:
        raise ValueError("scores must be a non-empty graphs x replicates matrix")
    mu = s.mean()
    ss_t = float(np.sum((s - mu) ** 2))
    ss_g = float(s.shape[1] * np.sum((s.mean(axis=1) - mu) ** 2))
    ss_e = max(ss_t - ss_g, 0.0)
    return VarianceDecomposition(ss_t, ss_g, ss_e, ss_e / ss_t if ss_t > 0 else 0.0)


@dataclass
class LinkPredictionResult:
    auc: float
    accuracy: float
    n_pairs: int


def sample_non_edges(g: Graph, count: int, rng) -> np.ndarray:
    """Uniform distinct non-adjacent pairs (u < v) by rejection."""
    possible = g.n * (g.n - 1) // 2 - g.m
    if possible < count:
        raise ValueError(f"only {possible} non-edges available, {count} requested")
    seen: set[tuple[int, int]] = set()
    out = []
    while len(out) < count:
        want = 2 * (count - len(out)) + 16
        u = rng.integers(0, g.n, size=want)
        v = rng.integers(0, g.n, size=want)
        for a, b in zip(u.tolist(), v.tolist()):
            if a == b:
                continue
            a, b = min(a, b), max(a, b)
            if (a, b) in seen or g.has_edge(a, b):
                continue
            seen.add((a, b))
            out.append((a, b))
            if len(out) == count:
                break
    return np.array(out, dtype=np.int64).reshape(-1, 2)


def pair_scores(emb, pairs: np.ndarray) -> np.ndarray:
    """p(uv) = 1 - d(u, v) / d_max, with d_max the largest distance among ``pairs``."""
    x = _coords(emb)
    d = np.linalg.norm(x[pairs[:, 0]] - x[pairs[:, 1]], axis=1)
    dmax = d.max() if d.size else 0.0
    return np.ones_like(d) if dmax == 0 else 1.0 - d / dmax


def link_prediction_experiment(g: Graph, embed_fn, holdout: float = 0.10,
                               rng=None) -> LinkPredictionResult:
    """Hide a share of edges, embed the rest, rank hidden edges against non-edges.

    ``embed_fn(graph, rng)`` returns an Embedding of the reduced graph.
    Accuracy predicts an edge when p(uv) >= 0.5.
    """
    if g.m < 10:
        raise ValueError("need at least 10 edges")
    rng = as_rng(rng)
    edges = g.edges()
    k = max(1, int(round(holdout * g.m)))
    hidden_idx = np.sort(rng.choice(g.m, size=k, replace=False))
    hidden = edges[hidden_idx]
    negatives = sample_non_edges(g, k, rng)
    kept = Graph.from_edges(g.n, np.delete(edges, hidden_idx, axis=0))
    emb = embed_fn(kept, rng)
    scores = pair_scores(emb, np.concatenate([hidden, negatives]))
    pos, neg = scores[:k], scores[k:]
    acc = (np.sum(pos >= 0.5) + np.sum(neg < 0.5)) / (2.0 * k)
    return LinkPredictionResult(auc(pos, neg), float(acc), 2 * k)
