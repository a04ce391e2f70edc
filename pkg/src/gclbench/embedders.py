"""Reference embedders: node2vec / DeepWalk (walks + SGNS) and HOPE."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from ._core import kernels
from .embedding import Embedding, random_embedding, read_embedding, write_embedding
from .graph import Graph
from .seeding import as_rng, derive_seed, uint64_seed

logger = logging.getLogger(__name__)

__all__ = [
    "WalkParams", "SgnsParams", "generate_walks", "alias_table", "train_sgns", "node2vec",
    "deepwalk", "hope_embed", "HopeResult", "random_embedding", "read_embedding",
    "write_embedding", "embed",
]


@dataclass(frozen=True)
class WalkParams:
    p: float = 1.0
    q: float = 1.0
    num_walks: int = 10
    walk_length: int = 80
    window: int = 10

    def validate(self):
        if self.p <= 0 or self.q <= 0:
            raise ValueError("p and q must be positive")
        if self.num_walks < 1 or self.walk_length < 2 or self.window < 1:
            raise ValueError("need num_walks >= 1, walk_length >= 2, window >= 1")


@dataclass(frozen=True)
class SgnsParams:
    dim: int = 128
    negatives: int = 5
    epochs: int = 5
    lr: float = 0.025
    lr_min: float = 1e-4

    def validate(self):
        if self.dim < 1 or self.negatives < 1 or self.epochs < 0:
            raise ValueError("need dim >= 1, negatives >= 1, epochs >= 0")


def generate_walks(g: Graph, params: WalkParams = WalkParams(), rng=None) -> np.ndarray:
    """``num_walks`` rounds of one walk per node, each round in shuffled order.

    Returns an int32 array of shape (num_walks * n, walk_length); isolated
    start nodes give length-1 walks padded with -1.  Each round draws from its
    own derived stream so rounds can be generated independently.
    """
    params.validate()
    if g.m == 0:
        raise ValueError("graph has no edges")
    rng = as_rng(rng)
    base = uint64_seed(rng)
    rounds = []
    for r in range(params.num_walks):
        starts = np.random.default_rng(derive_seed(base, r, 0)).permutation(g.n)
        rounds.append(kernels.node2vec_walks(g.indptr, g.indices, starts.astype(np.int64),
                                             params.walk_length, float(params.p),
                                             float(params.q), derive_seed(base, r, 1)))
    return np.ascontiguousarray(np.concatenate(rounds), dtype=np.int32)


def alias_table(weights) -> tuple[np.ndarray, np.ndarray]:
    """Vose alias tables: draw j uniformly, keep it w.p. prob[j], else take alias[j]."""
    w = np.asarray(weights, dtype=np.float64)
    n = w.size
    scaled = w * (n / w.sum())
    prob = np.ones(n)
    alias = np.arange(n, dtype=np.int64)
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]
    while small and large:
        s, l = small.pop(), large.pop()
        prob[s] = scaled[s]
        alias[s] = l
        scaled[l] -= 1.0 - scaled[s]
        (small if scaled[l] < 1.0 else large).append(l)
    return prob, alias


def train_sgns(walks: np.ndarray, n: int, params: SgnsParams = SgnsParams(), rng=None,
               window: int = 10, return_losses: bool = False):
    """Skip-gram with negative sampling over walk "sentences".

    Reduced random window per position, negatives from unigram counts raised
    to 3/4, learning rate decayed linearly, input vectors initialised uniform
    in [-0.5/d, 0.5/d] and output vectors at zero.  Input vectors are returned.
    """
    params.validate()
    if window < 1:
        raise ValueError("window must be at least 1")
    walks = np.ascontiguousarray(walks, dtype=np.int32)
    if walks.size == 0 or walks.max() >= n:
        raise ValueError("walk contains a node id outside 0..n-1")
    if params.dim >= n:
        logger.warning("dimension %d >= node count %d: model is overparameterised", params.dim, n)
    rng = as_rng(rng)
    d = params.dim
    syn0 = ((rng.random((n, d)) - 0.5) / d).astype(np.float32)
    syn1 = np.zeros((n, d), dtype=np.float32)
    counts = np.bincount(walks[walks >= 0], minlength=n).astype(np.float64)
    if counts.sum() == 0 or not np.any((walks >= 0).sum(axis=1) >= 2):
        raise ValueError("walks contain no (center, context) pair")
    prob, alias = alias_table(np.where(counts > 0, counts, 0.0) ** 0.75)
    losses = kernels.sgns_train(walks, window,
                                params.negatives, params.epochs, params.lr, params.lr_min,
                                prob, alias, uint64_seed(rng), syn0, syn1, return_losses)
    emb = Embedding(syn0.astype(np.float64))
    return (emb, np.asarray(losses)) if return_losses else emb


def node2vec(g: Graph, dim: int = 128, *, p: float = 1.0, q: float = 1.0,
             num_walks: int = 10, walk_length: int = 80, window: int = 10,
             negatives: int = 5, epochs: int = 5, rng=None) -> Embedding:
    rng = as_rng(rng)
    wp = WalkParams(p, q, num_walks, walk_length, window)
    walks = generate_walks(g, wp, rng)
    emb = train_sgns(walks, g.n, SgnsParams(dim, negatives, epochs), rng, window)
    emb.name = f"node2vec_d{dim}_p{p:g}_q{q:g}"
    return emb


def deepwalk(g: Graph, dim: int = 128, **kw) -> Embedding:
    """node2vec with uniform first-order walks (p = q = 1)."""
    kw.pop("p", None)
    kw.pop("q", None)
    emb = node2vec(g, dim, p=1.0, q=1.0, **kw)
    emb.name = f"deepwalk_d{dim}"
    return emb


@dataclass
class HopeResult:
    embedding: Embedding
    singular_values: np.ndarray
    loss: float


_HOPE_OVERSAMPLE = 10
_HOPE_POWER_ITERS = 7
_HOPE_EXPLICIT_LOSS_N = 2000


def _randomized_svd(s: sparse.csr_matrix, d: int, rng) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = s.shape[0]
    width = min(n, d + _HOPE_OVERSAMPLE)
    q, _ = np.linalg.qr(s @ rng.standard_normal((n, width)))
    for _ in range(_HOPE_POWER_ITERS):
        q, _ = np.linalg.qr(s.T @ q)
        q, _ = np.linalg.qr(s @ q)
    b = (s.T @ q).T  # q^T s
    ub, sv, vt = np.linalg.svd(b, full_matrices=False)
    u = q @ ub[:, :d]
    sv, vt = sv[:d], vt[:d]
    # deterministic signs: largest-magnitude entry of each left vector positive
    flip = np.sign(u[np.argmax(np.abs(u), axis=0), np.arange(u.shape[1])])
    flip[flip == 0] = 1.0
    return u * flip, sv, vt * flip[:, None]


def hope_embed(g: Graph, d: int, rng=None, return_result: bool = False):
    """HOPE with common-neighbour proximity S = A^2.

    Rank-d factorisation S ~ U diag(s) V^T by randomised subspace iteration;
    the node embedding is U diag(sqrt(s)).  The reported loss is
    ||S - U diag(s) V^T||_F.
    """
    if d < 1 or g.n < 2:
        raise ValueError("need d >= 1 and n >= 2")
    if d > g.n:
        raise ValueError(f"dimension {d} exceeds node count {g.n}")
    a = g.to_scipy().astype(np.float64)
    s = (a @ a).tocsr()
    u, sv, vt = _randomized_svd(s, d, as_rng(rng))
    if g.n <= _HOPE_EXPLICIT_LOSS_N:
        loss = float(np.linalg.norm(s.toarray() - (u * sv) @ vt))
    else:
        loss = float(np.sqrt(max(float(s.multiply(s).sum()) - np.sum(sv ** 2), 0.0)))
    emb = Embedding(u * np.sqrt(sv), name=f"hope_d{d}")
    return HopeResult(emb, sv, loss) if return_result else emb


def embed(g: Graph, algo: str, dim: int, rng=None, **kw) -> Embedding:
    """Dispatch by algorithm name: node2vec, deepwalk, hope or random."""
    if algo == "node2vec":
        return node2vec(g, dim, rng=rng, **kw)
    if algo == "deepwalk":
        return deepwalk(g, dim, rng=rng, **kw)
    if algo == "hope":
        return hope_embed(g, dim, rng)
    if algo == "random":
        return random_embedding(g.n, dim, rng, name=f"random_d{dim}")
    raise ValueError(f"unknown embedding algorithm {algo!r}")
