import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import root
from scipy.spatial.distance import jensenshannon

from conftest import complete_edges, random_graph
from gclbench.divergence import (DEFAULT_ALPHA_GRID, DegenerateInputError, DivergenceScorer,
                                 EdgeProportionVectors, PairGeometry, PowerKernel,
                                 divergence_at_alpha, divergence_score, fit_gcl, graph_vectors,
                                 js_divergence, model_vectors, vector_divergence)
from gclbench.embedding import Embedding, random_embedding
from gclbench.graph import Graph, Partition

LN2 = math.log(2.0)

# subnormals overflow the reference implementation's normalisation
unit = st.floats(0.0, 1.0).map(lambda x: x if x > 1e-12 else 0.0)
simplex = st.lists(unit, min_size=2, max_size=8).filter(lambda v: sum(v) > 1e-3)


def planted(n, k, p_in, p_out, seed):
    rng = np.random.default_rng(seed)
    lab = np.arange(n) % k
    i, j = np.triu_indices(n, 1)
    keep = rng.random(i.size) < np.where(lab[i] == lab[j], p_in, p_out)
    return Graph.from_edges(n, np.column_stack([i[keep], j[keep]])), Partition(lab)


def dense_kernel(coords, alpha):
    d = np.sqrt(((coords[:, None, :] - coords[None, :, :]) ** 2).sum(-1))
    r = d / d.max()
    k = np.power(1.0 - r, alpha)
    np.fill_diagonal(k, 0.0)
    return k


def oracle_fit(w, coords, alpha):
    """Solve sum_j x_i x_j g_ij = w_i with a general root finder (no clipping)."""
    k = dense_kernel(coords, alpha)
    sol = root(lambda x: x * (k @ x) - w, w / math.sqrt(w.sum()), tol=1e-13)
    assert sol.success
    return sol.x, k


def oracle_divergence(g, p, coords, alpha, weights=(0.5, 0.5)):
    x, k = oracle_fit(g.degrees.astype(float), coords, alpha)
    prob = np.triu(np.outer(x, x) * k, 1)
    ell = p.ell
    b = np.zeros((ell, ell))
    for i, j in zip(*np.nonzero(prob)):
        a, c = sorted((p.labels[i], p.labels[j]))
        b[a, c] += prob[i, j]
    c_obs = np.zeros((ell, ell))
    for u, v in g.edges():
        a, c = sorted((p.labels[u], p.labels[v]))
        c_obs[a, c] += 1
    iu = np.triu_indices(ell, 1)
    jsd = lambda s, t: jensenshannon(s, t) ** 2
    return (weights[0] * jsd(c_obs[iu], b[iu]) + weights[1] * jsd(np.diag(c_obs), np.diag(b)))


class TestJsd:
    def test_disjoint_is_ln2(self):
        assert js_divergence([1, 0], [0, 1]) == pytest.approx(LN2)

    def test_frozen_value(self):
        # independently: 0.5 KL(p||m) + 0.5 KL(q||m), m = (3/8, 5/8)
        assert js_divergence([0.5, 0.5], [0.25, 0.75]) == pytest.approx(0.033822, abs=1e-6)
        assert jensenshannon([0.5, 0.5], [0.25, 0.75]) ** 2 == pytest.approx(0.033822, abs=1e-6)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            js_divergence([1, 0], [1, 0, 0])

    @given(simplex, st.data())
    @settings(max_examples=80, deadline=None)
    def test_axioms(self, p, data):
        q = data.draw(st.lists(unit, min_size=len(p), max_size=len(p))
                      .filter(lambda v: sum(v) > 1e-3))
        d = js_divergence(p, q)
        assert 0.0 <= d <= LN2
        assert d == pytest.approx(js_divergence(q, p), abs=1e-12)
        assert js_divergence(p, p) == pytest.approx(0.0, abs=1e-12)
        assert d == pytest.approx(jensenshannon(p, q) ** 2, abs=1e-9)


class TestGraphVectors:
    def test_two_triangles_bridge(self, two_k3_bridge):
        c = graph_vectors(*two_k3_bridge)
        assert c.intra.tolist() == pytest.approx([3 / 7, 3 / 7])
        assert c.inter.tolist() == pytest.approx([1 / 7])
        assert c.total() == pytest.approx(1.0)

    def test_split_edge(self):
        c = graph_vectors(Graph.from_edges(2, [(0, 1)]), Partition([0, 1]))
        assert c.inter.tolist() == [1.0] and c.intra.tolist() == [0.0, 0.0]

    def test_one_community(self, k3):
        c = graph_vectors(k3, Partition([0, 0, 0]))
        assert c.intra.tolist() == [1.0] and c.inter.size == 0

    def test_no_edges(self):
        with pytest.raises(DegenerateInputError):
            graph_vectors(Graph.from_edges(3, []), Partition([0, 0, 1]))

    def test_block_matrix_ordering(self):
        b = np.array([[1.0, 2.0, 3.0], [0, 4.0, 5.0], [0, 0, 6.0]])
        v = EdgeProportionVectors.from_block_matrix(b)
        assert (v.inter * 21).tolist() == pytest.approx([2, 3, 5])
        assert (v.intra * 21).tolist() == pytest.approx([1, 4, 6])


class TestKernel:
    def test_log_base_matches_power(self):
        r = np.linspace(0, 1, 11)
        k = PowerKernel()
        for alpha in (0.0, 0.5, 3.0):
            assert np.allclose(np.exp(alpha * k.log_base(r.copy())), k(r, alpha))

    def test_zero_power_zero_is_one(self):
        assert np.exp(0.0 * PowerKernel().log_base(np.array([1.0])))[0] == 1.0

    def test_coincident_points_warn(self, caplog):
        with caplog.at_level(logging.WARNING):
            geo = PairGeometry(Embedding(np.zeros((4, 2))))
        assert geo.degenerate and np.all(geo.logk == 0)
        assert "coincide" in caplog.text


class TestFit:
    @pytest.mark.parametrize("n,c", [(10, 3), (50, 7)])
    def test_regular_alpha_zero(self, n, c):
        emb = random_embedding(n, 3, np.random.default_rng(0))
        m = fit_gcl(np.full(n, float(c)), emb, 0.0, tol=1e-10)
        assert m.converged
        assert np.allclose(m.x ** 2 * (n - 1), c, rtol=1e-8)

    def test_two_nodes_alpha_zero(self):
        # at any alpha > 0 the only pair sits at d_max where the kernel vanishes
        m = fit_gcl([1.0, 1.0], Embedding(np.array([[0.0], [1.0]])), 0.0, tol=1e-12)
        # clipped probabilities: any x1 x2 >= 1 realises the single edge
        assert m.converged and m.x[0] * m.x[1] >= 1.0
        assert m.expected_degrees().tolist() == [1.0, 1.0]

    def test_two_nodes_positive_alpha_cannot_converge(self):
        m = fit_gcl([1.0, 1.0], Embedding(np.array([[0.0], [1.0]])), 1.0, max_iter=20)
        assert not m.converged

    def test_zero_degree_nodes(self):
        emb = random_embedding(6, 2, np.random.default_rng(1))
        m = fit_gcl([2, 2, 2, 2, 0, 2], emb, 1.0)
        assert m.x[4] == 0.0 and m.converged

    def test_rejects_bad_input(self):
        emb = random_embedding(3, 2, np.random.default_rng(0))
        with pytest.raises(DegenerateInputError):
            fit_gcl([0, 0, 0], emb, 1.0)
        with pytest.raises(ValueError):
            fit_gcl([1, 1], emb, 1.0)
        with pytest.raises(ValueError):
            fit_gcl([1, 1, 1], emb, -1.0)

    @pytest.mark.parametrize("seed", range(20))
    def test_residual_against_dense_expectation(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(20, 501))
        g = random_graph(n, 8.0 / n, seed)
        emb = random_embedding(n, int(rng.integers(2, 9)), rng)
        alpha = float(rng.uniform(0, 3))
        m = fit_gcl(g.degrees, emb, alpha)
        assert m.converged and m.residual <= 1e-6
        k = dense_kernel(emb.coords, alpha)
        dexp = np.minimum(1.0, np.outer(m.x, m.x) * k).sum(1)
        pos = g.degrees > 0
        assert np.max(np.abs(dexp[pos] - g.degrees[pos]) / g.degrees[pos]) <= 1.01e-6

    def test_matches_root_finder(self):
        g, _ = planted(40, 3, 0.25, 0.03, 0)
        emb = random_embedding(40, 2, np.random.default_rng(7))
        x, _ = oracle_fit(g.degrees.astype(float), emb.coords, 1.5)
        m = fit_gcl(g.degrees, emb, 1.5, tol=1e-12)
        assert m.clipped == 0
        assert np.allclose(m.x, x, rtol=1e-9)


class TestModelVectors:
    @pytest.mark.parametrize("seed", range(3))
    def test_against_pair_sum(self, seed):
        rng = np.random.default_rng(seed)
        n = 300
        g = random_graph(n, 0.03, seed)
        emb = random_embedding(n, 4, rng)
        p = Partition.from_labels(rng.integers(0, 5, size=n))
        m = fit_gcl(g.degrees, emb, 2.0)
        prob = m.probabilities()
        i, j = np.triu_indices(n, 1)
        a, b = np.minimum(p.labels[i], p.labels[j]), np.maximum(p.labels[i], p.labels[j])
        blocks = np.zeros((p.ell, p.ell))
        np.add.at(blocks, (a, b), prob)
        want = EdgeProportionVectors.from_block_matrix(blocks)
        got = model_vectors(m, p)
        assert np.allclose(got.inter, want.inter, atol=1e-12)
        assert np.allclose(got.intra, want.intra, atol=1e-12)


class TestVectorDivergence:
    def test_weights_select_component(self):
        c = EdgeProportionVectors(np.array([0.1, 0.1, 0.2]), np.array([0.2, 0.2, 0.2]))
        b = EdgeProportionVectors(np.array([0.2, 0.1, 0.1]), np.array([0.1, 0.3, 0.2]))
        assert vector_divergence(c, b, (1, 0)) == pytest.approx(js_divergence(c.inter, b.inter))
        assert vector_divergence(c, b, (0, 1)) == pytest.approx(js_divergence(c.intra, b.intra))

    def test_single_community_uses_intra_only(self):
        c = EdgeProportionVectors(np.zeros(0), np.array([1.0]))
        assert vector_divergence(c, c, (1, 0)) == 0.0


class TestEndToEnd:
    # the oracle solves the unclipped equations; on this graph no pair clips for alpha <= 1.5
    @pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0, 1.5])
    def test_small_graph_oracle(self, alpha):
        g, p = planted(40, 3, 0.25, 0.03, 0)
        emb = random_embedding(40, 2, np.random.default_rng(7))
        assert fit_gcl(g.degrees, emb, alpha).clipped == 0
        got = divergence_at_alpha(g, p, emb, alpha, tol=1e-12)
        assert got == pytest.approx(oracle_divergence(g, p, emb.coords, alpha), abs=1e-9)

    def test_score_is_refined_minimum(self):
        g, p = planted(40, 3, 0.25, 0.03, 0)
        emb = random_embedding(40, 2, np.random.default_rng(7))
        rep = divergence_score(g, emb, partition=p, alpha_grid=np.arange(0, 1.5001, 0.25),
                               tol=1e-12)
        fine = np.arange(0, 1.5001, 0.005)
        oracle = min(oracle_divergence(g, p, emb.coords, a) for a in fine)
        assert rep.score <= oracle + 1e-6
        assert rep.score == pytest.approx(oracle, abs=1e-4)

    def test_score_is_curve_minimum(self, two_k5_bridge):
        g, p = two_k5_bridge
        rep = divergence_score(g, random_embedding(10, 3, np.random.default_rng(0)), partition=p)
        assert rep.score == min(v for _, v in rep.curve)
        assert 0.0 <= rep.score <= LN2
        grid = {a for a, _ in rep.curve}
        assert set(DEFAULT_ALPHA_GRID) <= grid
        assert rep.clusterer == "given" and rep.ell == 2 and not rep.degenerate

    def test_community_aware_embedding_scores_better(self):
        g, p = planted(300, 4, 0.08, 0.005, 1)
        rng = np.random.default_rng(0)
        centres = rng.normal(size=(4, 8))
        good = Embedding(centres[p.labels] + 0.3 * rng.normal(size=(300, 8)))
        bad = random_embedding(300, 8, rng)
        assert divergence_score(g, good, partition=p).score < divergence_score(g, bad, partition=p).score

    def test_invariance(self):
        rng = np.random.default_rng(5)
        g = random_graph(80, 0.08, 5)
        p = Partition.from_labels(rng.integers(0, 4, size=80))
        emb = random_embedding(80, 3, rng)
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        moved = Embedding(3.7 * emb.coords @ q + rng.normal(size=3))
        scorer = DivergenceScorer(g, p)
        a, b = scorer.score(emb), scorer.score(moved)
        assert b.score == pytest.approx(a.score, abs=1e-9)
        assert b.best_alpha == pytest.approx(a.best_alpha, abs=1e-9)

    def test_single_community_is_degenerate(self, k3):
        rep = divergence_score(k3, random_embedding(3, 2, np.random.default_rng(0)),
                               partition=Partition([0, 0, 0]))
        assert rep.degenerate and rep.score == 0.0

    def test_coincident_embedding(self, two_k3_bridge, caplog):
        g, p = two_k3_bridge
        with caplog.at_level(logging.WARNING):
            rep = divergence_score(g, Embedding(np.ones((6, 2))), partition=p)
        assert rep.degenerate
        assert len({round(v, 12) for _, v in rep.curve}) == 1

    def test_size_mismatch(self, two_k3_bridge):
        g, p = two_k3_bridge
        with pytest.raises(ValueError):
            divergence_score(g, random_embedding(5, 2, np.random.default_rng(0)), partition=p)

    def test_clusters_when_no_partition(self, two_k5_bridge):
        g, _ = two_k5_bridge
        rep = divergence_score(g, random_embedding(10, 2, np.random.default_rng(0)), rng=0)
        assert rep.clusterer == "ecg" and rep.ell == 2

    def test_report_serialisation(self, two_k3_bridge):
        g, p = two_k3_bridge
        rep = divergence_score(g, random_embedding(6, 2, np.random.default_rng(0), name="r"),
                               partition=p)
        kv = dict(line.split("=", 1) for line in rep.to_text().splitlines())
        assert float(kv["score"]) == rep.score and kv["embedding"] == "r"
        lines = rep.curve_csv().splitlines()
        assert lines[0] == "alpha,divergence" and len(lines) == len(rep.curve) + 1
        assert float(lines[1].split(",")[1]) == rep.curve[0][1]
