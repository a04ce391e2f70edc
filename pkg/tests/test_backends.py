import itertools

import numpy as np
import pytest

import gclbench.clustering
import gclbench.divergence
import gclbench.embedders
import gclbench.graph
from conftest import complete_edges, random_graph
from gclbench._core import BACKEND, compiled, fallback
from gclbench.abcd import AbcdParams, generate_abcd
from gclbench.clustering import ecg, louvain
from gclbench.divergence import PairGeometry, divergence_score
from gclbench.embedders import WalkParams, generate_walks, node2vec
from gclbench.embedding import random_embedding
from gclbench.graph import Graph, triangle_count

needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled kernels not built")


@pytest.fixture
def use_fallback(monkeypatch):
    for mod in (gclbench.clustering, gclbench.divergence, gclbench.embedders, gclbench.graph):
        monkeypatch.setattr(mod, "kernels", fallback)


def test_backend_name():
    assert BACKEND in ("cython", "python")


@needs_compiled
class TestExactEquivalence:
    @pytest.mark.parametrize("seed", range(5))
    def test_triangles(self, seed):
        g = random_graph(150, 0.08, seed)
        assert compiled.triangle_count(g.indptr, g.indices) == fallback.triangle_count(
            g.indptr, g.indices)

    @pytest.mark.parametrize("seed", range(5))
    def test_gcl_kernels(self, seed):
        rng = np.random.default_rng(seed)
        geo = PairGeometry(random_embedding(120, 3, rng))
        x = rng.random(120) * 2
        labels = rng.integers(0, 4, size=120).astype(np.int64)
        for alpha in (0.0, 1.3, 7.0):
            d1, c1 = compiled.gcl_expected_degrees(geo.logk, x, alpha)
            d2, c2 = fallback.gcl_expected_degrees(geo.logk, x, alpha)
            assert c1 == c2
            assert np.allclose(d1, d2, rtol=1e-12, atol=0)
            b1 = compiled.gcl_block_sums(geo.logk, x, alpha, labels, 4)
            b2 = fallback.gcl_block_sums(geo.logk, x, alpha, labels, 4)
            assert np.allclose(b1, b2, rtol=1e-12, atol=0)

    @pytest.mark.parametrize("seed", range(5))
    def test_louvain_local_moves(self, seed):
        rng = np.random.default_rng(seed)
        g = random_graph(200, 0.04, seed)
        a = g.to_scipy().astype(np.float64)
        a.data = rng.random(a.data.size)
        a = ((a + a.T) / 2).tocsr()
        k = np.asarray(a.sum(axis=1)).ravel()
        order = rng.permutation(g.n).astype(np.int64)
        out = []
        for backend in (compiled, fallback):
            labels = np.empty(g.n, dtype=np.int64)
            labels[order] = np.arange(g.n)
            tot = k[order].copy()
            moves = backend.louvain_local_moves(a.indptr.astype(np.int64), a.indices.astype(np.int64),
                                                a.data.copy(), k, order, labels, tot, k.sum(), 100)
            out.append((labels, tot, moves))
        assert np.array_equal(out[0][0], out[1][0]) and out[0][2] == out[1][2]
        assert np.allclose(out[0][1], out[1][1])

    def test_clustering_end_to_end(self, use_fallback):
        g = generate_abcd(AbcdParams(n=500, xi=0.3, seed=1)).graph
        slow_l = louvain(g, np.random.default_rng(0))
        slow_e = ecg(g, 4, np.random.default_rng(0))
        gclbench.clustering.kernels = compiled
        assert louvain(g, np.random.default_rng(0)) == slow_l
        assert ecg(g, 4, np.random.default_rng(0)) == slow_e

    def test_score_end_to_end(self, use_fallback, two_k5_bridge):
        g, p = two_k5_bridge
        emb = random_embedding(10, 3, np.random.default_rng(0))
        slow = divergence_score(g, emb, partition=p)
        gclbench.divergence.kernels = compiled
        fast = divergence_score(g, emb, partition=p)
        assert fast.score == pytest.approx(slow.score, abs=1e-10)


def return_fraction(walks):
    return np.mean(walks[:, 2:] == walks[:, :-2])


@pytest.mark.parametrize("backend", ["compiled", "fallback"])
class TestStatisticalEquivalence:
    def kernels(self, backend):
        if backend == "compiled" and compiled is None:
            pytest.skip("compiled kernels not built")
        return compiled if backend == "compiled" else fallback

    def test_triangle_return_probability(self, backend):
        k = self.kernels(backend)
        g = Graph.from_edges(3, complete_edges(range(3)))
        starts = np.repeat(np.arange(3, dtype=np.int64), 300)
        w = k.node2vec_walks(g.indptr, g.indices, starts, 60, 2.0, 1.0, 11)
        # about 5e4 correlated steps; the binomial standard error is near 0.002
        assert abs(return_fraction(w) - 1 / 3) < 0.015

    def test_walks_follow_edges(self, backend):
        k = self.kernels(backend)
        g = random_graph(40, 0.1, 0)
        w = k.node2vec_walks(g.indptr, g.indices, np.arange(40, dtype=np.int64), 20, 0.5, 2.0, 3)
        for row in w:
            row = row[row >= 0]
            assert all(g.has_edge(a, b) for a, b in zip(row[:-1], row[1:]))

    def test_sgns_separates_cliques(self, backend, monkeypatch):
        k = self.kernels(backend)
        monkeypatch.setattr(gclbench.embedders, "kernels", k)
        g = Graph.from_edges(20, complete_edges(range(10)) + complete_edges(range(10, 20))
                             + [(9, 10)])
        e = node2vec(g, 2, num_walks=20, walk_length=20, window=5, epochs=5, rng=0)
        c = e.coords
        a, b = c[:10].mean(0), c[10:].mean(0)
        side = np.array([np.dot(x - (a + b) / 2, a - b) > 0 for x in c])
        assert side[:10].all() and not side[10:].any()


def test_fallback_triangles_match_graph(use_fallback):
    g = random_graph(60, 0.2, 4)
    assert triangle_count(g) == sum(
        1 for a, b, c in itertools.combinations(range(60), 3)
        if g.has_edge(a, b) and g.has_edge(b, c) and g.has_edge(a, c))


def test_fallback_walk_generation(use_fallback):
    g = random_graph(30, 0.2, 0)
    w = generate_walks(g, WalkParams(num_walks=2, walk_length=8), 0)
    assert w.shape == (60, 8)
