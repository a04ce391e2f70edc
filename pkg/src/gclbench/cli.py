"""Command line interface: ``gclbench [--seed S] [--out-dir D] [--workers W] <command> ...``.

Exit codes: 0 success, 2 invalid input, 3 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from .abcd import AbcdParams, RewiringError, generate_abcd
from .clustering import cluster
from .divergence import DegenerateInputError, DivergenceScorer
from .embedders import embed
from .embedding import read_embedding, write_embedding
from .evaluation import community_detection_ami, knn_classify, link_prediction_experiment
from .graph import GraphFormatError, graph_stats, load_edge_list, load_partition, save_edge_list, \
    save_partition
from .sweep import SweepResumeError, SweepSpec, run_sweep

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGED = 0, 2, 3
EVAL_COLUMNS = ("graph_id", "algo", "dim", "seed", "divergence", "metric", "value")

logger = logging.getLogger("gclbench")


class NonConvergence(RuntimeError):
    pass


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t.strip())


def _add_abcd_args(p: argparse.ArgumentParser, n_default: int) -> None:
    p.add_argument("--n", type=int, default=n_default)
    p.add_argument("--gamma", type=float, default=2.5)
    p.add_argument("--delta-min", type=int, default=5)
    p.add_argument("--delta-max", type=int, default=None, help="default: round(n^(1/(gamma-1)))")
    p.add_argument("--beta", type=float, default=1.5)
    p.add_argument("--s-min", type=int, default=50)
    p.add_argument("--s-max", type=int, default=1000)
    p.add_argument("--xi", type=float, default=0.2)
    p.add_argument("--variant", choices=("global", "local"), default="global")
    p.add_argument("--community-model", choices=("configuration", "chung_lu"),
                   default="configuration")
    p.add_argument("--fractions", type=_floats, default=(0.30, 0.25, 0.20, 0.15, 0.10),
                   help="fixed community size fractions, comma separated")
    p.add_argument("--sample-sizes", action="store_true",
                   help="draw community sizes from the power law instead of --fractions")


def _abcd_params(a, seed: int) -> AbcdParams:
    return AbcdParams(n=a.n, gamma=a.gamma, delta_min=a.delta_min, delta_max=a.delta_max,
                      beta=a.beta, s_min=a.s_min, s_max=a.s_max, xi=a.xi, variant=a.variant,
                      community_model=a.community_model,
                      fixed_community_fractions=None if a.sample_sizes else a.fractions,
                      seed=seed)


def _add_embed_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--algo", choices=("node2vec", "deepwalk", "hope", "random"), default="node2vec")
    p.add_argument("--dim", type=int, default=128)
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--num-walks", type=int, default=10)
    p.add_argument("--walk-length", type=int, default=80)
    p.add_argument("--window", type=int, default=10)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--epochs", type=int, default=5)


def _embed_options(a) -> dict:
    if a.algo == "node2vec":
        return dict(p=a.p, q=a.q, num_walks=a.num_walks, walk_length=a.walk_length,
                    window=a.window, negatives=a.negatives, epochs=a.epochs)
    if a.algo == "deepwalk":
        return dict(num_walks=a.num_walks, walk_length=a.walk_length, window=a.window,
                    negatives=a.negatives, epochs=a.epochs)
    return {}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gclbench", description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out-dir", type=Path, default=Path("."))
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("abcd", help="generate an ABCD graph with ground-truth communities")
    _add_abcd_args(p, 10_000)

    p = sub.add_parser("embed", help="embed a graph")
    p.add_argument("graph", type=Path)
    _add_embed_args(p)
    p.add_argument("--output", type=Path, default=None)

    p = sub.add_parser("cluster", help="ECG or Louvain communities")
    p.add_argument("graph", type=Path)
    p.add_argument("--method", choices=("ecg", "louvain"), default="ecg")
    p.add_argument("--output", type=Path, default=None)

    p = sub.add_parser("score", help="divergence score of one or more embeddings")
    p.add_argument("graph", type=Path)
    p.add_argument("embeddings", type=Path, nargs="+")
    p.add_argument("--clusterer", choices=("ecg", "louvain", "file"), default="ecg")
    p.add_argument("--partition", type=Path, default=None,
                   help="partition file; implies --clusterer file")
    p.add_argument("--weights", type=_floats, default=(0.5, 0.5), metavar="W_EXT,W_INT",
                   help="weights of the inter and intra divergences")

    p = sub.add_parser("eval", help="supervised task metric for an embedding")
    p.add_argument("graph", type=Path)
    p.add_argument("--task", choices=("classify", "communities", "linkpred"), required=True)
    p.add_argument("--embedding", type=Path, default=None,
                   help="embedding to evaluate (classify, communities)")
    p.add_argument("--labels", type=Path, default=None, help="ground-truth partition file")
    _add_embed_args(p)
    p.add_argument("--graph-id", default=None)
    p.add_argument("--divergence", type=float, default=None,
                   help="divergence score to record alongside the metric")
    p.add_argument("--results", type=Path, default=None, help="CSV to append to")

    p = sub.add_parser("sweep", help="ABCD parameter sweep")
    p.add_argument("--param", default="xi")
    p.add_argument("--values", type=_floats, default=(0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8,
                                                      0.9, 1.0))
    p.add_argument("--graphs", type=int, default=3)
    p.add_argument("--embeddings", type=int, default=3)
    p.add_argument("--algo", action="append", default=None, metavar="NAME:DIM[,DIM...]",
                   help="algorithm and dimensions, repeatable (default node2vec:32)")
    p.add_argument("--clusterer", choices=("ecg", "louvain"), default="ecg")
    p.add_argument("--num-walks", type=int, default=10)
    p.add_argument("--epochs", type=int, default=5)
    _add_abcd_args(p, 1000)

    p = sub.add_parser("stats", help="graph statistics")
    p.add_argument("graph", type=Path)
    return parser


def _write(out_dir: Path, name: str, text: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    path.write_text(text, encoding="utf-8")
    return path


def cmd_abcd(a) -> int:
    params = _abcd_params(a, a.seed)
    params.validate()
    res = generate_abcd(params)
    a.out_dir.mkdir(parents=True, exist_ok=True)
    save_edge_list(res.graph, a.out_dir / "graph.edges")
    save_partition(res.ground_truth, a.out_dir / "communities.txt")
    _write(a.out_dir, "manifest.txt", params.manifest())
    print(f"nodes={res.graph.n} edges={res.graph.m} communities={res.ground_truth.ell} "
          f"realized_xi={res.realized_xi!r}")
    return EXIT_OK


def cmd_embed(a) -> int:
    loaded = load_edge_list(a.graph)
    rng = np.random.default_rng(a.seed)
    e = embed(loaded.graph, a.algo, a.dim, rng, **_embed_options(a))
    a.out_dir.mkdir(parents=True, exist_ok=True)
    out = a.output or a.out_dir / f"{a.algo}_d{a.dim}.emb"
    write_embedding(e, out, loaded.id_map)
    print(out)
    return EXIT_OK


def cmd_cluster(a) -> int:
    loaded = load_edge_list(a.graph)
    part = cluster(loaded.graph, a.method, np.random.default_rng(a.seed))
    a.out_dir.mkdir(parents=True, exist_ok=True)
    out = a.output or a.out_dir / f"{a.method}.communities"
    save_partition(part, out, loaded.id_map)
    print(f"communities={part.ell} output={out}")
    return EXIT_OK


def cmd_score(a) -> int:
    loaded = load_edge_list(a.graph)
    g = loaded.graph
    if len(a.weights) != 2 or min(a.weights) < 0 or sum(a.weights) <= 0:
        raise ValueError("--weights needs two non-negative values, not both zero")
    if a.partition is not None:
        part = load_partition(a.partition, ids=loaded.id_map)
        name = "file"
    elif a.clusterer == "file":
        raise ValueError("--clusterer file requires --partition")
    else:
        part = cluster(g, a.clusterer, np.random.default_rng(a.seed))
        name = a.clusterer
    scorer = DivergenceScorer(g, part, clusterer=name, weights=tuple(a.weights))
    converged = True
    for path in a.embeddings:
        rep = scorer.score(read_embedding(path, ids=loaded.id_map), name=path.name)
        stem = path.stem
        _write(a.out_dir, f"{stem}.score.txt", rep.to_text())
        _write(a.out_dir, f"{stem}.curve.csv", rep.curve_csv())
        sys.stdout.write(rep.to_text())
        converged &= rep.all_converged
    if not converged:
        raise NonConvergence("GCL fit did not converge for at least one alpha")
    return EXIT_OK


def cmd_eval(a) -> int:
    loaded = load_edge_list(a.graph)
    g = loaded.graph
    rng = np.random.default_rng(a.seed)
    if a.task == "linkpred":
        opts = _embed_options(a)
        res = link_prediction_experiment(
            g, lambda h, r: embed(h, a.algo, a.dim, r, **opts), rng=rng)
        rows = [("auc", res.auc), ("accuracy", res.accuracy)]
        algo, dim = a.algo, a.dim
    else:
        if a.embedding is None or a.labels is None:
            raise ValueError(f"--task {a.task} needs --embedding and --labels")
        emb = read_embedding(a.embedding, ids=loaded.id_map)
        truth = load_partition(a.labels, ids=loaded.id_map)
        if a.task == "classify":
            rows = [("accuracy", knn_classify(emb, truth, rng=rng))]
        else:
            rows = [("ami", community_detection_ami(emb, truth, rng))]
        algo, dim = a.embedding.stem, emb.d
    graph_id = a.graph_id or a.graph.stem
    div = "" if a.divergence is None else repr(a.divergence)
    out = a.results or a.out_dir / "eval.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    new = not out.exists() or out.stat().st_size == 0
    with open(out, "a", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if new:
            w.writerow(EVAL_COLUMNS)
        for metric, value in rows:
            w.writerow([graph_id, algo, dim, a.seed, div, metric, repr(float(value))])
            print(f"{metric}={value!r}")
    return EXIT_OK


def _parse_algos(items) -> tuple:
    if not items:
        return (("node2vec", (32,)),)
    out = []
    for item in items:
        name, _, dims = item.partition(":")
        if name not in ("node2vec", "deepwalk", "hope", "random") or not dims:
            raise ValueError(f"bad --algo {item!r}; expected NAME:DIM[,DIM...]")
        out.append((name, tuple(int(d) for d in dims.split(","))))
    return tuple(out)


def cmd_sweep(a) -> int:
    base = _abcd_params(a, 0)
    values = a.values
    if a.param in ("n", "delta_min", "delta_max", "s_min", "s_max"):
        values = tuple(int(v) for v in values)
    walk_opts = dict(num_walks=a.num_walks, epochs=a.epochs)
    spec = SweepSpec(param=a.param, values=values, graphs_per_value=a.graphs,
                     embeddings_per_graph=a.embeddings, algos=_parse_algos(a.algo), base=base,
                     seed=a.seed, clusterer=a.clusterer,
                     embed_options={"node2vec": walk_opts, "deepwalk": walk_opts})
    rows = run_sweep(spec, a.out_dir, workers=a.workers)
    print(f"rows={len(rows)} output={a.out_dir}")
    if not all(int(r["converged"]) for r in rows):
        raise NonConvergence("GCL fit did not converge for at least one run")
    return EXIT_OK


def cmd_stats(a) -> int:
    loaded = load_edge_list(a.graph)
    stats = graph_stats(loaded.graph).as_dict()
    text = "".join(f"{k}={v!r}\n" if isinstance(v, float) else f"{k}={v}\n"
                   for k, v in stats.items())
    _write(a.out_dir, f"{a.graph.stem}.stats.txt", text)
    sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {"abcd": cmd_abcd, "embed": cmd_embed, "cluster": cmd_cluster, "score": cmd_score,
            "eval": cmd_eval, "sweep": cmd_sweep, "stats": cmd_stats}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.workers < 1:
        print("error: --workers must be at least 1", file=sys.stderr)
        return EXIT_INVALID
    try:
        return COMMANDS[args.command](args)
    except (NonConvergence, RewiringError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except (GraphFormatError, DegenerateInputError, SweepResumeError, ValueError,
            FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
