import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import complete_edges, random_graph
from gclbench.abcd import AbcdParams, generate_abcd
from gclbench.clustering import (WeightedGraphView, cluster, ecg, ecg_weights, louvain,
                                 louvain_level1, modularity)
from gclbench.evaluation import ami
from gclbench.graph import Graph, Partition


def set_partitions(n):
    """All partitions of range(n) as restricted growth strings."""
    a = [0] * n

    def rec(i, top):
        if i == n:
            yield list(a)
            return
        for c in range(top + 2):
            a[i] = c
            yield from rec(i + 1, max(top, c))

    yield from rec(1, 0)


def plain_modularity(edges, deg, m, labels):
    inside = sum(1 for u, v in edges if labels[u] == labels[v])
    vol = {}
    for v, c in enumerate(labels):
        vol[c] = vol.get(c, 0) + deg[v]
    return inside / m - sum((x / (2 * m)) ** 2 for x in vol.values())


def canon(p):
    """Labels renumbered by first appearance, so equal clusterings compare equal."""
    _, first, inv = np.unique(p.labels, return_index=True, return_inverse=True)
    order = np.argsort(np.argsort(first))
    return order[inv].tolist()


def relabel(g, perm):
    """Graph with node v renamed perm[v]."""
    return Graph.from_edges(g.n, perm[g.edges()])


class TestModularity:
    def test_single_community_is_zero(self, k3):
        assert modularity(k3, Partition([0, 0, 0])) == pytest.approx(0.0)

    def test_two_triangles(self):
        g = Graph.from_edges(6, complete_edges(range(3)) + complete_edges(range(3, 6)))
        assert modularity(g, Partition([0, 0, 0, 1, 1, 1])) == pytest.approx(0.5)

    def test_random_labels_near_zero(self):
        g = random_graph(600, 0.02, 0)
        labels = np.random.default_rng(1).integers(0, 4, size=g.n)
        assert abs(modularity(g, Partition.from_labels(labels))) < 0.03

    def test_weighted_matches_plain_when_unit(self, two_k5_bridge):
        g, p = two_k5_bridge
        assert modularity(WeightedGraphView(g), p) == pytest.approx(modularity(g, p))

    def test_no_edges(self):
        with pytest.raises(ValueError):
            modularity(Graph.from_edges(3, []), Partition([0, 0, 0]))

    @given(st.integers(0, 1000))
    @settings(max_examples=30, deadline=None)
    def test_against_direct_formula(self, seed):
        g = random_graph(25, 0.2, seed)
        if g.m == 0:
            return
        labels = np.random.default_rng(seed).integers(0, 3, size=g.n)
        p = Partition.from_labels(labels)
        direct = plain_modularity(g.edges().tolist(), g.degrees, g.m, p.labels)
        assert modularity(g, p) == pytest.approx(direct)
        assert -0.5 <= modularity(g, p) < 1


class TestLouvain:
    def test_two_k5_matches_brute_force(self, two_k5_bridge):
        g, truth = two_k5_bridge
        edges, deg = g.edges().tolist(), g.degrees
        best, best_q = None, -1.0
        for labels in set_partitions(g.n):
            q = plain_modularity(edges, deg, g.m, labels)
            if q > best_q + 1e-12:
                best, best_q = labels, q
        assert Partition(best) == truth
        for seed in range(5):
            p = louvain(g, np.random.default_rng(seed))
            assert canon(p) == canon(truth)
            assert modularity(g, p) == pytest.approx(best_q)

    def test_single_clique(self):
        g = Graph.from_edges(6, complete_edges(range(6)))
        assert louvain(g, np.random.default_rng(0)).ell == 1

    def test_no_edges_gives_singletons(self):
        assert louvain(Graph.from_edges(4, []), 0).ell == 4

    def test_fixed_point(self, two_k5_bridge):
        g, truth = two_k5_bridge
        p = louvain(g, np.random.default_rng(3))
        q = louvain(WeightedGraphView(g), np.random.default_rng(3))
        assert p == q
        assert canon(p) == canon(truth)

    @given(st.integers(0, 1000))
    @settings(max_examples=25, deadline=None)
    def test_not_worse_than_singletons(self, seed):
        g = random_graph(40, 0.1, seed)
        if g.m == 0:
            return
        p = louvain(g, np.random.default_rng(seed))
        assert modularity(g, p) >= modularity(g, Partition(np.arange(g.n))) - 1e-12

    def test_determinism(self):
        g = random_graph(200, 0.03, 5)
        assert louvain(g, np.random.default_rng(9)) == louvain(g, np.random.default_rng(9))

    @given(st.integers(0, 1000))
    @settings(max_examples=20, deadline=None)
    def test_relabel_equivariance(self, seed):
        rng = np.random.default_rng(seed)
        g = random_graph(30, 0.15, seed)
        if g.m == 0:
            return
        perm = rng.permutation(g.n)
        pri = rng.permutation(g.n)
        pri_h = np.empty_like(pri)
        pri_h[perm] = pri
        a = louvain(g, priority=pri)
        b = louvain(relabel(g, perm), priority=pri_h)
        assert np.array_equal(b.labels[perm], a.labels)


class TestEcg:
    def test_weights_range(self, two_k5_bridge):
        g, _ = two_k5_bridge
        w = ecg_weights(g, 8, np.random.default_rng(0))
        assert np.all((w >= 0.05) & (w <= 1.0))

    def test_bridge_outside_two_core(self):
        # a pendant edge has core number 1 at its leaf, so it gets the minimum weight
        g = Graph.from_edges(6, complete_edges(range(5)) + [(4, 5)])
        w = ecg_weights(g, 4, np.random.default_rng(0))
        assert w[g.edges().tolist().index([4, 5])] == 0.05

    def test_k1_equals_louvain_on_reweighted_graph(self, two_k5_bridge):
        g, truth = two_k5_bridge
        rng = np.random.default_rng(4)
        pri = [rng.permutation(g.n), rng.permutation(g.n)]
        w = ecg_weights(g, 1, priorities=pri[:1])
        oracle = louvain(WeightedGraphView(g, w), priority=pri[1])
        assert ecg(g, k=1, priorities=pri) == oracle
        assert canon(oracle) == canon(truth)

    def test_consensus_degenerate(self):
        # disjoint cliques: every level-1 run co-clusters every edge
        g = Graph.from_edges(12, complete_edges(range(4)) + complete_edges(range(4, 8))
                             + complete_edges(range(8, 12)))
        w = ecg_weights(g, 5, np.random.default_rng(0))
        assert np.allclose(w, 1.0)
        a, b = ecg(g, 5, np.random.default_rng(0)), louvain(g, np.random.default_rng(0))
        assert ami(a, b) == pytest.approx(1.0)

    def test_relabel_equivariance(self):
        rng = np.random.default_rng(2)
        g = generate_abcd(AbcdParams(n=300, xi=0.3, seed=2)).graph
        perm = rng.permutation(g.n)
        pri = [rng.permutation(g.n) for _ in range(5)]
        pri_h = []
        for p in pri:
            q = np.empty_like(p)
            q[perm] = p
            pri_h.append(q)
        a = ecg(g, 4, priorities=pri)
        b = ecg(relabel(g, perm), 4, priorities=pri_h)
        assert np.array_equal(b.labels[perm], a.labels)

    def test_recovers_abcd_communities(self):
        for seed in range(5):
            gen = generate_abcd(AbcdParams(n=2000, xi=0.1, seed=seed))
            p = ecg(gen.graph, rng=np.random.default_rng(seed))
            assert ami(p, gen.ground_truth) >= 0.9

    def test_louvain_positive_modularity_on_abcd(self):
        gen = generate_abcd(AbcdParams(n=1000, xi=0.4, seed=1))
        p = louvain(gen.graph, np.random.default_rng(0))
        assert modularity(gen.graph, p) >= max(modularity(gen.graph, gen.ground_truth), 0.0) - 0.02

    def test_dispatch(self, two_k5_bridge):
        g, truth = two_k5_bridge
        assert canon(cluster(g, "louvain", 0)) == canon(truth)
        assert canon(cluster(g, "ecg", 0)) == canon(truth)
        with pytest.raises(ValueError):
            cluster(g, "leiden", 0)

    def test_level1_is_local_moves_only(self, two_k5_bridge):
        g, truth = two_k5_bridge
        assert louvain_level1(g, np.random.default_rng(0)).ell >= truth.ell
