"""Divergence score of an embedding under the Geometric Chung-Lu (GCL) model.

Given a partition of the graph, the observed share of edges inside and between
communities is compared (Jensen-Shannon) with the share expected under a GCL
model fitted to the degrees and the embedding distances.  The kernel strength
``alpha`` is chosen to minimise that divergence.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist

from ._core import kernels
from .clustering import cluster
from .embedding import Embedding
from .graph import Graph, Partition
from .seeding import as_rng

logger = logging.getLogger(__name__)

# stands in for log(0) in the kernel table: exp(alpha * _LOG_ZERO) underflows to 0 for alpha > 0
_LOG_ZERO = -1e300
DEFAULT_ALPHA_GRID = tuple(np.round(np.arange(0.0, 10.0001, 0.25), 10))
DEFAULT_WEIGHTS = (0.5, 0.5)


class DegenerateInputError(ValueError):
    pass


@dataclass
class EdgeProportionVectors:
    inter: np.ndarray  # pairs (i, j), i < j, lexicographic
    intra: np.ndarray

    @classmethod
    def from_block_matrix(cls, blocks: np.ndarray) -> "EdgeProportionVectors":
        """From an upper-triangular community x community edge-mass matrix."""
        ell = blocks.shape[0]
        total = np.triu(blocks).sum()
        if total == 0:
            # a model with no expected edges at all (every kernel value underflowed)
            total = 1.0
        iu = np.triu_indices(ell, k=1)
        return cls(blocks[iu] / total, np.diag(blocks) / total)

    @property
    def ell(self) -> int:
        return self.intra.size

    def total(self) -> float:
        return float(self.inter.sum() + self.intra.sum())


class PowerKernel:
    """g_alpha(r) = (1 - r)^alpha on normalised distance r = d / d_max."""

    name = "power"

    def log_base(self, r: np.ndarray) -> np.ndarray:
        """In-place log(1 - r), with log(0) stored as a large finite negative."""
        np.negative(r, out=r)
        with np.errstate(divide="ignore"):
            np.log1p(r, out=r)
        r[r < _LOG_ZERO] = _LOG_ZERO
        return r

    def __call__(self, r, alpha: float):
        r = np.asarray(r, dtype=np.float64)
        return np.power(1.0 - r, alpha)


class PairGeometry:
    """Condensed table of log kernel bases for all node pairs of an embedding."""

    def __init__(self, emb: Embedding, kernel=None):
        self.kernel = kernel or PowerKernel()
        self.n = emb.n
        if self.n < 2:
            raise DegenerateInputError("need at least two nodes")
        dist = pdist(emb.coords)
        self.dmax = float(dist.max())
        self.degenerate = self.dmax == 0.0
        if self.degenerate:
            logger.warning("all embedded points coincide; kernel reduces to plain Chung-Lu")
            dist[:] = 0.0
            self.logk = dist
        else:
            dist /= self.dmax
            self.logk = self.kernel.log_base(dist)


@dataclass
class GclModel:
    x: np.ndarray
    alpha: float
    dmax: float
    degrees: np.ndarray
    converged: bool
    iterations: int
    residual: float
    clipped: int
    geometry: PairGeometry = field(repr=False, compare=False, default=None)

    def expected_degrees(self) -> np.ndarray:
        return kernels.gcl_expected_degrees(self.geometry.logk, self.x, self.alpha)[0]

    def probabilities(self) -> np.ndarray:
        """Condensed pair probabilities min(1, x_i x_j g(d_ij)); O(n^2) memory."""
        n = self.x.size
        i, j = np.triu_indices(n, k=1)
        return np.minimum(1.0, self.x[i] * self.x[j] * np.exp(self.alpha * self.geometry.logk))


def graph_vectors(g: Graph, p: Partition) -> EdgeProportionVectors:
    """Observed fraction of edges inside each community and between each pair."""
    if g.m == 0:
        raise DegenerateInputError("graph has no edges")
    if p.n != g.n:
        raise ValueError("partition size does not match graph")
    e = g.edges()
    a = p.labels[e[:, 0]]
    b = p.labels[e[:, 1]]
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    blocks = np.zeros((p.ell, p.ell))
    np.add.at(blocks, (lo, hi), 1.0)
    return EdgeProportionVectors.from_block_matrix(blocks)


def fit_gcl(degrees, emb, alpha: float, *, tol: float = 1e-6, max_iter: int = 1000,
            damping: float = 0.5, x0=None, kernel=None) -> GclModel:
    """Fit node weights so every expected degree matches its target.

    Damped fixed point x_i <- (1 - lam) x_i + lam x_i w_i / D_i, where D_i is
    the expected degree with probabilities clipped at 1 (without clipping this
    is x_i <- (1 - lam) x_i + lam w_i / sum_j x_j g_ij).  ``emb`` may be an
    :class:`Embedding` or a precomputed :class:`PairGeometry`.  Zero-degree
    nodes get weight 0.  On non-convergence the best iterate is returned with
    ``converged=False``.
    """
    geo = emb if isinstance(emb, PairGeometry) else PairGeometry(emb, kernel)
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    w = np.asarray(degrees, dtype=np.float64)
    if w.shape != (geo.n,):
        raise ValueError("one degree per embedded node required")
    if np.any(w < 0) or not np.any(w > 0):
        raise DegenerateInputError("degrees must be non-negative with at least one positive")
    a = 0.0 if geo.degenerate else float(alpha)
    pos = w > 0
    x = (w / math.sqrt(w.sum())) if x0 is None else np.array(x0, dtype=np.float64)
    x[~pos] = 0.0
    best_x, best_res, best_clip = x.copy(), np.inf, 0
    it = 0
    for it in range(max_iter + 1):
        dexp, clipped = kernels.gcl_expected_degrees(geo.logk, x, a)
        res = float(np.max(np.abs(dexp[pos] - w[pos]) / w[pos]))
        if res < best_res:
            best_x, best_res, best_clip = x.copy(), res, clipped
        if res <= tol or it == max_iter:
            break
        ratio = np.where(dexp[pos] > 0, w[pos] / np.maximum(dexp[pos], 1e-300), 2.0)
        x[pos] = (1.0 - damping) * x[pos] + damping * x[pos] * ratio
    converged = best_res <= tol
    if not converged:
        logger.warning("GCL fit did not converge at alpha=%g: residual %.3g after %d iterations",
                       alpha, best_res, it)
    return GclModel(best_x, float(alpha), geo.dmax, w, converged, it, best_res, best_clip, geo)


def model_vectors(model: GclModel, p: Partition) -> EdgeProportionVectors:
    """Expected share of edges inside / between communities under the model."""
    a = 0.0 if model.geometry.degenerate else model.alpha
    blocks = kernels.gcl_block_sums(model.geometry.logk, model.x, a, p.labels, p.ell)
    return EdgeProportionVectors.from_block_matrix(blocks)


def _normalised(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if np.any(v < 0):
        raise ValueError("distribution has negative entries")
    s = v.sum()
    return v / s if s > 0 else v


def _kl_to_mix(p: np.ndarray, m: np.ndarray) -> float:
    nz = p > 0
    return float(np.sum(p[nz] * np.log(p[nz] / m[nz])))


def js_divergence(p, q) -> float:
    """Jensen-Shannon divergence in nats (0 <= JSD <= ln 2)."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {q.shape}")
    if p.size == 0:
        return 0.0
    p, q = _normalised(p), _normalised(q)
    m = 0.5 * (p + q)
    val = 0.5 * _kl_to_mix(p, m) + 0.5 * _kl_to_mix(q, m)
    return min(max(val, 0.0), math.log(2.0))


def vector_divergence(c: EdgeProportionVectors, b: EdgeProportionVectors,
                      weights=DEFAULT_WEIGHTS) -> float:
    w_ext, w_int = weights
    if c.ell == 1:
        return js_divergence(c.intra, b.intra)
    return w_ext * js_divergence(c.inter, b.inter) + w_int * js_divergence(c.intra, b.intra)


def divergence_at_alpha(g: Graph, p: Partition, emb, alpha: float,
                        weights=DEFAULT_WEIGHTS, **fit_kw) -> float:
    model = fit_gcl(g.degrees, emb, alpha, **fit_kw)
    return vector_divergence(graph_vectors(g, p), model_vectors(model, p), weights)


@dataclass
class DivergenceReport:
    graph_vectors: EdgeProportionVectors
    best_alpha: float
    curve: list  # (alpha, divergence), sorted by alpha
    score: float
    clusterer: str = ""
    embedding: str = ""
    degenerate: bool = False
    all_converged: bool = True
    clipped_pairs: int = 0
    ell: int = 0

    def to_text(self) -> str:
        fields = {
            "embedding": self.embedding,
            "clusterer": self.clusterer,
            "communities": self.ell,
            "score": repr(self.score),
            "best_alpha": repr(self.best_alpha),
            "degenerate": self.degenerate,
            "all_converged": self.all_converged,
            "clipped_pairs": self.clipped_pairs,
        }
        return "".join(f"{k}={v}\n" for k, v in fields.items())

    def curve_csv(self) -> str:
        return "alpha,divergence\n" + "".join(f"{a!r},{d!r}\n" for a, d in self.curve)


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class DivergenceScorer:
    """Scores many embeddings of one graph against one shared partition."""

    def __init__(self, g: Graph, partition: Partition, *, clusterer: str = "given",
                 alpha_grid=DEFAULT_ALPHA_GRID, weights=DEFAULT_WEIGHTS,
                 refine_width: float = 1e-2, kernel=None, tol: float = 1e-6,
                 max_iter: int = 1000):
        if g.m == 0:
            raise DegenerateInputError("graph has no edges")
        self.graph = g
        self.partition = partition
        self.clusterer = clusterer
        self.alpha_grid = np.sort(np.asarray(alpha_grid, dtype=np.float64))
        if self.alpha_grid.size == 0 or self.alpha_grid[0] < 0:
            raise ValueError("alpha grid must be non-empty and non-negative")
        self.weights = weights
        self.refine_width = refine_width
        self.kernel = kernel
        self.fit_kw = dict(tol=tol, max_iter=max_iter)
        self.vectors = graph_vectors(g, partition)

    def score(self, emb: Embedding, name: str | None = None) -> DivergenceReport:
        if emb.n != self.graph.n:
            raise ValueError(f"embedding has {emb.n} rows, graph has {self.graph.n} nodes")
        geo = PairGeometry(emb, self.kernel)
        deg = self.graph.degrees
        cache: dict[float, GclModel] = {}
        state = {"converged": True, "clipped": 0}

        def evaluate(alpha: float) -> float:
            if alpha in cache:
                return cache[alpha][1]
            x0 = None
            if cache:
                near = min(cache, key=lambda a: abs(a - alpha))
                x0 = cache[near][0].x
            model = fit_gcl(deg, geo, alpha, x0=x0, **self.fit_kw)
            state["converged"] &= model.converged
            state["clipped"] = max(state["clipped"], model.clipped)
            val = vector_divergence(self.vectors, model_vectors(model, self.partition),
                                    self.weights)
            cache[alpha] = (model, val)
            return val

        grid_vals = [evaluate(float(a)) for a in self.alpha_grid]
        k = int(np.argmin(grid_vals))
        lo = self.alpha_grid[max(k - 1, 0)]
        hi = self.alpha_grid[min(k + 1, self.alpha_grid.size - 1)]
        a, b = float(lo), float(hi)
        if b - a > self.refine_width:
            c = b - _INV_PHI * (b - a)
            d = a + _INV_PHI * (b - a)
            fc, fd = evaluate(c), evaluate(d)
            while b - a > self.refine_width:
                if fc <= fd:
                    b, d, fd = d, c, fc
                    c = b - _INV_PHI * (b - a)
                    fc = evaluate(c)
                else:
                    a, c, fc = c, d, fd
                    d = a + _INV_PHI * (b - a)
                    fd = evaluate(d)
        curve = sorted((alpha, val) for alpha, (_, val) in cache.items())
        best_alpha, best = min(curve, key=lambda t: (t[1], t[0]))
        return DivergenceReport(
            graph_vectors=self.vectors, best_alpha=best_alpha, curve=curve, score=best,
            clusterer=self.clusterer, embedding=name if name is not None else emb.name,
            degenerate=self.partition.ell == 1 or geo.degenerate,
            all_converged=state["converged"], clipped_pairs=state["clipped"],
            ell=self.partition.ell)


def divergence_score(g: Graph, emb: Embedding, clusterer: str = "ecg", partition=None,
                     alpha_grid=DEFAULT_ALPHA_GRID, weights=DEFAULT_WEIGHTS, rng=None,
                     **kw) -> DivergenceReport:
    """Cluster (unless ``partition`` is given), then score one embedding."""
    if partition is None:
        partition = cluster(g, clusterer, as_rng(rng))
    else:
        clusterer = "given"
    scorer = DivergenceScorer(g, partition, clusterer=clusterer, alpha_grid=alpha_grid,
                              weights=weights, **kw)
    return scorer.score(emb)
