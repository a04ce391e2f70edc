"""Undirected simple graphs, partitions, descriptive statistics and file I/O."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from ._core import kernels

logger = logging.getLogger(__name__)


class GraphFormatError(ValueError):
    """Raised for malformed edge-list, partition or embedding files."""


def canonical_edges(edges, n: int | None = None):
    """Return (unique u<v edges sorted lexicographically, n_duplicates, n_self_loops)."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if edges.size and (edges.min() < 0 or (n is not None and edges.max() >= n)):
        raise ValueError(f"edge endpoint outside 0..{'n-1' if n is None else n - 1}")
    loops = edges[:, 0] == edges[:, 1]
    e = edges[~loops]
    e = np.sort(e, axis=1)
    if e.size == 0:
        return np.empty((0, 2), dtype=np.int64), 0, int(loops.sum())
    size = int(n) if n is not None else int(e.max()) + 1
    key = np.unique(e[:, 0] * size + e[:, 1])
    out = np.column_stack([key // size, key % size])
    return out, int(e.shape[0] - out.shape[0]), int(loops.sum())


class Graph:
    """Immutable undirected simple graph on nodes ``0..n-1`` in sorted CSR form."""

    __slots__ = ("n", "indptr", "indices", "_edges")

    def __init__(self, n: int, indptr, indices):
        self.n = int(n)
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int64)
        self._edges = None
        self._check()
        self.indptr.flags.writeable = False
        self.indices.flags.writeable = False

    @classmethod
    def from_edges(cls, n: int, edges) -> "Graph":
        """Build from an edge array, silently dropping self-loops and duplicates."""
        uv, _, _ = canonical_edges(edges, n)
        both = np.concatenate([uv, uv[:, ::-1]])
        order = np.lexsort((both[:, 1], both[:, 0]))
        both = both[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(both[:, 0], minlength=n), out=indptr[1:])
        g = cls(n, indptr, both[:, 1])
        g._edges = uv
        g._edges.flags.writeable = False
        return g

    def _check(self):
        if self.n < 1:
            raise ValueError("graph needs at least one node")
        ip, ix = self.indptr, self.indices
        if ip.shape != (self.n + 1,) or ip[0] != 0 or ip[-1] != ix.shape[0]:
            raise ValueError("malformed CSR index pointer")
        if ix.size:
            if ix.min() < 0 or ix.max() >= self.n:
                raise ValueError("neighbour id out of range")
            rows = np.repeat(np.arange(self.n), np.diff(ip))
            if np.any(rows == ix):
                raise ValueError("self-loop in adjacency")
            same_row = rows[1:] == rows[:-1]
            if np.any(ix[1:][same_row] <= ix[:-1][same_row]):
                raise ValueError("adjacency not strictly sorted (duplicate edge?)")
            fwd = rows * self.n + ix
            if not np.array_equal(np.sort(ix * self.n + rows), fwd):
                raise ValueError("adjacency is not symmetric")
        if ix.shape[0] % 2:
            raise ValueError("degree sum is odd")

    @property
    def m(self) -> int:
        return int(self.indices.shape[0] // 2)

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    @property
    def adjacency(self) -> list[np.ndarray]:
        return [self.neighbors(v) for v in range(self.n)]

    def edges(self) -> np.ndarray:
        """Canonical edge enumeration: rows (u, v), u < v, lexicographic."""
        if self._edges is None:
            rows = np.repeat(np.arange(self.n), self.degrees)
            keep = rows < self.indices
            self._edges = np.column_stack([rows[keep], self.indices[keep]])
            self._edges.flags.writeable = False
        return self._edges

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.neighbors(u)
        i = np.searchsorted(nb, v)
        return bool(i < nb.size and nb[i] == v)

    def to_scipy(self, weights=None) -> sparse.csr_matrix:
        data = np.ones(self.indices.shape[0]) if weights is None else weights
        return sparse.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def remove_edges(self, edges) -> "Graph":
        """Copy of the graph without ``edges`` (node set unchanged)."""
        drop, _, _ = canonical_edges(edges, self.n)
        e = self.edges()
        keep = ~np.isin(e[:, 0] * self.n + e[:, 1], drop[:, 0] * self.n + drop[:, 1])
        return Graph.from_edges(self.n, e[keep])

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m})"

    def __eq__(self, other):
        return (isinstance(other, Graph) and self.n == other.n
                and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices))


def degree_sequence(g: Graph) -> list[int]:
    return g.degrees.tolist()


class Partition:
    """Hard assignment of every node to one of ``ell`` non-empty communities."""

    __slots__ = ("labels", "ell", "sizes")

    def __init__(self, labels):
        labels = np.ascontiguousarray(labels, dtype=np.int64)
        if labels.ndim != 1 or labels.size == 0:
            raise ValueError("labels must be a non-empty 1-D sequence")
        if labels.min() < 0:
            raise ValueError("negative community label")
        sizes = np.bincount(labels)
        if np.any(sizes == 0):
            raise ValueError("community labels must be contiguous 0..ell-1; use from_labels")
        self.labels = labels
        self.labels.flags.writeable = False
        self.sizes = sizes
        self.ell = int(sizes.size)

    @classmethod
    def from_labels(cls, labels) -> "Partition":
        """Compact arbitrary hashable-by-value labels to 0..ell-1 (sorted order)."""
        _, inv = np.unique(np.asarray(labels), return_inverse=True)
        return cls(inv.ravel())

    @property
    def n(self) -> int:
        return int(self.labels.size)

    def members(self, c: int) -> np.ndarray:
        return np.flatnonzero(self.labels == c)

    def __len__(self):
        return self.n

    def __eq__(self, other):
        return isinstance(other, Partition) and np.array_equal(self.labels, other.labels)

    def __repr__(self):
        return f"Partition(n={self.n}, ell={self.ell})"


class LoadedGraph(NamedTuple):
    graph: Graph
    id_map: np.ndarray  # original id of every compacted node
    n_duplicates: int
    n_self_loops: int


def _data_lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if line:
                yield lineno, line.split()


def load_edge_list(path) -> LoadedGraph:
    """Read a whitespace-separated undirected edge list.

    Extra columns (weights) are ignored.  Node ids are compacted to ``0..n-1``
    in increasing order of the original ids; ``id_map[i]`` is the original id.
    """
    pairs = []
    for lineno, tok in _data_lines(path):
        if len(tok) < 2:
            raise GraphFormatError(f"{path}:{lineno}: expected two node ids, got {tok!r}")
        try:
            u, v = int(tok[0]), int(tok[1])
        except ValueError:
            raise GraphFormatError(f"{path}:{lineno}: non-integer node id in {tok[:2]!r}") from None
        if u < 0 or v < 0:
            raise GraphFormatError(f"{path}:{lineno}: negative node id")
        pairs.append((u, v))
    if not pairs:
        raise GraphFormatError(f"{path}: no edges")
    raw = np.asarray(pairs, dtype=np.int64)
    id_map, compact = np.unique(raw, return_inverse=True)
    compact = compact.reshape(-1, 2)
    n = int(id_map.size)
    uv, dups, loops = canonical_edges(compact, n)
    if dups or loops:
        logger.warning("%s: dropped %d duplicate edges and %d self-loops", path, dups, loops)
    return LoadedGraph(Graph.from_edges(n, uv), id_map, dups, loops)


def save_edge_list(g: Graph, path) -> None:
    np.savetxt(path, g.edges(), fmt="%d")


def save_partition(p: Partition, path, ids=None) -> None:
    """One ``node community`` line per node; node ``v`` is written as ``ids[v]`` if given."""
    labels = range(p.n) if ids is None else [int(i) for i in ids]
    with open(path, "w", encoding="utf-8") as fh:
        for v, c in zip(labels, p.labels.tolist()):
            fh.write(f"{v} {c}\n")


def load_partition(path, n: int | None = None, ids=None) -> Partition:
    """Read ``node community`` pairs; label gaps are compacted with a warning.

    ``ids`` translates file node ids back to compacted graph ids.
    """
    nodes, comms = [], []
    for lineno, tok in _data_lines(path):
        if len(tok) != 2:
            raise GraphFormatError(f"{path}:{lineno}: expected 'node community'")
        try:
            nodes.append(int(tok[0]))
            comms.append(int(tok[1]))
        except ValueError:
            raise GraphFormatError(f"{path}:{lineno}: non-integer entry") from None
    if ids is not None:
        index = {int(v): i for i, v in enumerate(ids)}
        try:
            nodes = [index[v] for v in nodes]
        except KeyError as exc:
            raise GraphFormatError(f"{path}: node {exc.args[0]} is not in the graph") from None
        n = len(index)
    nodes = np.asarray(nodes, dtype=np.int64)
    size = len(nodes) if n is None else n
    if len(nodes) != size or not np.array_equal(np.sort(nodes), np.arange(size)):
        raise GraphFormatError(f"{path}: expected exactly one line for each of {size} nodes, "
                               f"found {len(nodes)} lines")
    labels = np.empty(size, dtype=np.int64)
    labels[nodes] = comms
    p = Partition.from_labels(labels)
    if p.ell != labels.max() + 1 or labels.min() != 0:
        logger.warning("%s: community labels compacted to 0..%d", path, p.ell - 1)
    return p


def core_numbers(g: Graph) -> np.ndarray:
    """k-core index of every node (Batagelj-Zaversnik bucket peeling)."""
    deg = g.degrees.copy()
    n = g.n
    max_deg = int(deg.max()) if n else 0
    order = np.argsort(deg, kind="stable")
    bin_start = np.zeros(max_deg + 2, dtype=np.int64)
    np.cumsum(np.bincount(deg, minlength=max_deg + 1), out=bin_start[1:])
    bins = bin_start[:-1].tolist()
    vert = order.tolist()
    pos = [0] * n
    for i, v in enumerate(vert):
        pos[v] = i
    d = deg.tolist()
    ip, ix = g.indptr.tolist(), g.indices.tolist()
    for i in range(n):
        v = vert[i]
        for e in range(ip[v], ip[v + 1]):
            u = ix[e]
            if d[u] > d[v]:
                du = d[u]
                pu = pos[u]
                pw = bins[du]
                w = vert[pw]
                if u != w:
                    vert[pu], vert[pw] = w, u
                    pos[u], pos[w] = pw, pu
                bins[du] += 1
                d[u] -= 1
    return np.asarray(d, dtype=np.int64)


@dataclass(frozen=True)
class GraphStats:
    nodes: int
    edges: int
    density: float
    max_degree: int
    min_degree: int
    avg_degree: float
    assortativity: float | None
    triangles: int
    clustering: float
    max_k_core: int
    components: int
    diameter: int
    avg_path_length: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def degree_assortativity(g: Graph) -> float | None:
    """Pearson correlation of endpoint degrees over both edge orientations."""
    if g.m == 0:
        return None
    deg = g.degrees.astype(np.float64)
    e = g.edges()
    a = np.concatenate([deg[e[:, 0]], deg[e[:, 1]]])
    b = np.concatenate([deg[e[:, 1]], deg[e[:, 0]]])
    a = a - a.mean()
    b = b - b.mean()
    denom = math.sqrt(float(a @ a) * float(b @ b))
    if denom == 0.0:
        return None
    return float(a @ b) / denom


def triangle_count(g: Graph) -> int:
    return int(kernels.triangle_count(g.indptr, g.indices))


def _largest_component_paths(g: Graph, n_comp: int, comp_labels: np.ndarray, block: int = 256):
    sizes = np.bincount(comp_labels)
    nodes = np.flatnonzero(comp_labels == sizes.argmax())
    if nodes.size < 2:
        return 0, 0.0
    sub = g.to_scipy()[nodes][:, nodes]
    diameter, total = 0, 0.0
    for lo in range(0, nodes.size, block):
        dist = csgraph.shortest_path(sub, method="D", unweighted=True,
                                     indices=np.arange(lo, min(lo + block, nodes.size)))
        diameter = max(diameter, int(dist.max()))
        total += float(dist.sum())
    return diameter, total / (nodes.size * (nodes.size - 1))


def graph_stats(g: Graph) -> GraphStats:
    deg = g.degrees
    n, m = g.n, g.m
    tri = triangle_count(g)
    wedges = int((deg * (deg - 1) // 2).sum())
    n_comp, comp = csgraph.connected_components(g.to_scipy(), directed=False)
    diameter, apl = _largest_component_paths(g, n_comp, comp)
    return GraphStats(
        nodes=n,
        edges=m,
        density=2.0 * m / (n * (n - 1)) if n > 1 else 0.0,
        max_degree=int(deg.max()),
        min_degree=int(deg.min()),
        avg_degree=2.0 * m / n,
        assortativity=degree_assortativity(g),
        triangles=tri,
        clustering=3.0 * tri / wedges if wedges else 0.0,
        max_k_core=int(core_numbers(g).max()) if m else 0,
        components=int(n_comp),
        diameter=diameter,
        avg_path_length=apl,
    )
