"""Louvain modularity optimisation and the ECG consensus wrapper.

Node visiting order is driven by a per-node priority (a permutation).  The
initial community of a node is its rank in that order and communities are
renumbered by the smallest rank they contain, so the lowest-id tie-break is
tied to visiting order rather than to node ids: relabelling the graph and
permuting the priority accordingly gives the relabelled partition.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from ._core import kernels
from .graph import Graph, Partition, core_numbers
from .seeding import as_rng

ECG_ENSEMBLE = 16
ECG_MIN_WEIGHT = 0.05
_MAX_SWEEPS = 1000


@dataclass
class WeightedGraphView:
    """A graph plus positive edge weights aligned with ``graph.edges()``."""

    graph: Graph
    edge_weights: np.ndarray | None = None

    def __post_init__(self):
        if self.edge_weights is None:
            self.edge_weights = np.ones(self.graph.m)
        self.edge_weights = np.asarray(self.edge_weights, dtype=np.float64)
        if self.edge_weights.shape != (self.graph.m,):
            raise ValueError("one weight per edge required")
        if np.any(self.edge_weights <= 0):
            raise ValueError("edge weights must be positive")

    def matrix(self) -> sparse.csr_matrix:
        """Symmetric weighted adjacency with canonical CSR layout."""
        g = self.graph
        e = g.edges()
        a = sparse.coo_matrix((np.concatenate([self.edge_weights, self.edge_weights]),
                               (np.concatenate([e[:, 0], e[:, 1]]),
                                np.concatenate([e[:, 1], e[:, 0]]))), shape=(g.n, g.n))
        a = a.tocsr()
        a.sort_indices()
        return a


def _as_view(g) -> WeightedGraphView:
    return g if isinstance(g, WeightedGraphView) else WeightedGraphView(g)


def modularity(g, p: Partition) -> float:
    """Newman modularity: sum over communities of W_c/W - (vol_c / 2W)^2."""
    view = _as_view(g)
    if view.graph.m == 0:
        raise ValueError("modularity undefined for a graph without edges")
    if p.n != view.graph.n:
        raise ValueError("partition size does not match graph")
    e = view.graph.edges()
    w = view.edge_weights
    lab = p.labels
    total = w.sum()
    inside = lab[e[:, 0]] == lab[e[:, 1]]
    w_in = np.bincount(lab[e[inside, 0]], weights=w[inside], minlength=p.ell)
    vol = (np.bincount(lab[e[:, 0]], weights=w, minlength=p.ell)
           + np.bincount(lab[e[:, 1]], weights=w, minlength=p.ell))
    return float(np.sum(w_in / total - (vol / (2.0 * total)) ** 2))


def _renumber_by_first(labels: np.ndarray, order: np.ndarray) -> tuple[np.ndarray, int]:
    """Compact labels so community ids follow first appearance in ``order``."""
    first = np.full(labels.max() + 1, -1, dtype=np.int64)
    seen_order = labels[order]
    _, idx = np.unique(seen_order, return_index=True)
    comms = seen_order[np.sort(idx)]
    first[comms] = np.arange(comms.size)
    return first[labels], int(comms.size)


def _local_moves(a: sparse.csr_matrix, order: np.ndarray, m2: float) -> np.ndarray:
    n = a.shape[0]
    k = np.asarray(a.sum(axis=1)).ravel()
    labels = np.empty(n, dtype=np.int64)
    labels[order] = np.arange(n)
    tot = k[order].copy()
    kernels.louvain_local_moves(a.indptr.astype(np.int64), a.indices.astype(np.int64),
                                a.data.astype(np.float64), k, order.astype(np.int64),
                                labels, tot, m2, _MAX_SWEEPS)
    return labels


def _aggregate(a: sparse.csr_matrix, labels: np.ndarray, ell: int) -> sparse.csr_matrix:
    ind = sparse.csr_matrix((np.ones(labels.size), (np.arange(labels.size), labels)),
                            shape=(labels.size, ell))
    agg = (ind.T @ a @ ind).tocsr()
    agg.sort_indices()
    return agg


def _priority(n: int, rng, priority) -> np.ndarray:
    if priority is None:
        return as_rng(rng).permutation(n)
    priority = np.asarray(priority, dtype=np.int64)
    if priority.shape != (n,):
        raise ValueError("priority must hold one entry per node")
    return priority


def louvain_level1(g, rng=None, priority=None) -> Partition:
    """First Louvain phase only: local moves on the original graph."""
    view = _as_view(g)
    a = view.matrix()
    order = np.argsort(_priority(view.graph.n, rng, priority), kind="stable")
    labels = _local_moves(a, order, 2.0 * view.edge_weights.sum())
    labels, _ = _renumber_by_first(labels, order)
    return Partition(labels)


def louvain(g, rng=None, priority=None) -> Partition:
    """Two-phase Louvain: local moves, aggregate, repeat until nothing moves.

    ``priority`` (a permutation of node ids' ranks) fixes the visiting order;
    when omitted it is drawn from ``rng``.
    """
    view = _as_view(g)
    n = view.graph.n
    if view.graph.m == 0:
        return Partition(np.arange(n))
    a = view.matrix()
    m2 = 2.0 * view.edge_weights.sum()
    order0 = np.argsort(_priority(n, rng, priority), kind="stable")
    order = order0
    membership = np.arange(n)
    while True:
        labels = _local_moves(a, order, m2)
        labels, ell = _renumber_by_first(labels, order)
        if ell == a.shape[0]:
            break
        membership = labels[membership]
        a = _aggregate(a, labels, ell)
        # aggregated node c was first reached at rank c of the previous order
        order = np.arange(ell)
    membership, _ = _renumber_by_first(labels[membership], order0)
    return Partition(membership)


def ecg_weights(g: Graph, k: int = ECG_ENSEMBLE, rng=None, w_min: float = ECG_MIN_WEIGHT,
                priorities=None) -> np.ndarray:
    """Consensus edge weights from ``k`` level-1 Louvain runs."""
    if k < 1:
        raise ValueError("ensemble size must be at least 1")
    rng = as_rng(rng)
    e = g.edges()
    together = np.zeros(g.m)
    for r in range(k):
        pri = None if priorities is None else priorities[r]
        lab = louvain_level1(g, rng, pri).labels
        together += lab[e[:, 0]] == lab[e[:, 1]]
    core = core_numbers(g)
    in_core = (core[e[:, 0]] >= 2) & (core[e[:, 1]] >= 2)
    return np.where(in_core, w_min + (1.0 - w_min) * together / k, w_min)


def ecg(g: Graph, k: int = ECG_ENSEMBLE, rng=None, w_min: float = ECG_MIN_WEIGHT,
        priorities=None) -> Partition:
    """Ensemble clustering: Louvain on ECG-reweighted edges.

    ``priorities`` optionally supplies the k + 1 visiting-order permutations
    (k ensemble runs, then the final pass) instead of drawing them from ``rng``.
    """
    if g.m == 0:
        return Partition(np.arange(g.n))
    rng = as_rng(rng)
    w = ecg_weights(g, k, rng, w_min, priorities)
    final = None if priorities is None else priorities[k]
    return louvain(WeightedGraphView(g, w), rng, final)


def cluster(g: Graph, method: str = "ecg", rng=None, **kw) -> Partition:
    if method == "ecg":
        return ecg(g, rng=rng, **kw)
    if method == "louvain":
        return louvain(g, rng, **kw)
    raise ValueError(f"unknown clusterer {method!r}")
