"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--n 2000] [--repeat 3]

Prints one line per kernel: best-of-``repeat`` seconds for each backend and
the speed-up.  Inputs come from one ABCD graph and a random embedding.
"""
import argparse
import time

import numpy as np
from scipy import sparse

from gclbench._core import compiled, fallback
from gclbench.abcd import AbcdParams, generate_abcd
from gclbench.divergence import PairGeometry
from gclbench.embedders import alias_table
from gclbench.embedding import random_embedding


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def workloads(n, seed):
    rng = np.random.default_rng(seed)
    g = generate_abcd(AbcdParams(n=n, seed=seed)).graph
    geo = PairGeometry(random_embedding(n, 16, rng))
    x = rng.random(n) * 0.3
    labels = rng.integers(0, 5, size=n).astype(np.int64)

    a = sparse.csr_matrix(g.to_scipy(), dtype=np.float64)
    k = np.asarray(a.sum(axis=1)).ravel()
    order = rng.permutation(n).astype(np.int64)

    def louvain_args():
        lab = np.empty(n, dtype=np.int64)
        lab[order] = np.arange(n)
        return (a.indptr.astype(np.int64), a.indices.astype(np.int64), a.data, k, order, lab,
                k[order].copy(), k.sum(), 100)

    starts = np.arange(n, dtype=np.int64)
    walks = compiled.node2vec_walks(g.indptr, g.indices, starts, 40, 1.0, 1.0, 1) \
        if compiled else fallback.node2vec_walks(g.indptr, g.indices, starts, 40, 1.0, 1.0, 1)
    counts = np.bincount(walks[walks >= 0], minlength=n).astype(np.float64)
    prob, alias = alias_table(counts ** 0.75)

    def sgns(backend):
        syn0 = ((rng.random((n, 32)) - 0.5) / 32).astype(np.float32)
        syn1 = np.zeros((n, 32), dtype=np.float32)
        backend.sgns_train(walks, 5, 5, 1, 0.025, 1e-4, prob, alias, 7, syn0, syn1, False)

    return {
        "triangle_count": lambda b: b.triangle_count(g.indptr, g.indices),
        "louvain_local_moves": lambda b: b.louvain_local_moves(*louvain_args()),
        "gcl_expected_degrees": lambda b: b.gcl_expected_degrees(geo.logk, x, 2.0),
        "gcl_block_sums": lambda b: b.gcl_block_sums(geo.logk, x, 2.0, labels, 5),
        "node2vec_walks": lambda b: b.node2vec_walks(g.indptr, g.indices, starts, 40, 0.5, 2.0, 3),
        "sgns_train": sgns,
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000, help="graph size")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if compiled is None:
        raise SystemExit("compiled kernels are not built; run `python setup.py build_ext --inplace`")
    print(f"{'kernel':24s} {'compiled s':>11s} {'fallback s':>11s} {'speed-up':>9s}")
    for name, fn in workloads(args.n, args.seed).items():
        tc = best_of(lambda: fn(compiled), args.repeat)
        tf = best_of(lambda: fn(fallback), args.repeat)
        print(f"{name:24s} {tc:11.4f} {tf:11.4f} {tf / tc:8.1f}x")


if __name__ == "__main__":
    main()
