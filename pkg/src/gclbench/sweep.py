"""Parameter sweeps over ABCD families: embed, score, aggregate.

For each value of one ABCD parameter a family of graphs is generated; every
graph is clustered once and each (algorithm, dimension) pair is embedded
several times and scored.  Every job is seeded from (base seed, value index,
graph index, ...) so any row can be recomputed alone, and results files are
byte-identical across runs.  Wall-clock timings go to a separate file.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .abcd import AbcdParams, generate_abcd, natural_cutoff
from .clustering import cluster
from .divergence import DivergenceScorer
from .embedders import embed
from .evaluation import variance_decomposition
from .seeding import derive_seed

logger = logging.getLogger(__name__)

RESULT_COLUMNS = ("param", "value", "graph", "algo", "dim", "replicate", "graph_seed",
                  "embedding_seed", "divergence", "best_alpha", "converged")


class SweepResumeError(RuntimeError):
    pass


@dataclass
class SweepSpec:
    param: str = "xi"
    values: tuple = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
    graphs_per_value: int = 3
    embeddings_per_graph: int = 3
    algos: tuple = (("node2vec", (32,)),)
    base: AbcdParams = field(default_factory=lambda: AbcdParams(n=1000))
    seed: int = 0
    clusterer: str = "ecg"
    embed_options: dict = field(default_factory=dict)

    def validate(self):
        if not self.values:
            raise ValueError("sweep needs at least one parameter value")
        if self.graphs_per_value < 1 or self.embeddings_per_graph < 1:
            raise ValueError("graph and embedding counts must be at least 1")
        if self.param not in {f.name for f in fields(AbcdParams)} or self.param == "seed":
            raise ValueError(f"cannot sweep over {self.param!r}")
        if not self.algos or any(not dims for _, dims in self.algos):
            raise ValueError("need at least one algorithm with at least one dimension")
        for v in self.values:
            self.params_for(v).validate()

    def params_for(self, value) -> AbcdParams:
        changes = {self.param: value}
        # a base using the natural degree cut-off keeps using it as n or gamma vary
        if self.param in ("n", "gamma") and self.base.delta_max == min(
                natural_cutoff(self.base.n, self.base.gamma), self.base.n - 1):
            changes["delta_max"] = None
        return replace(self.base, **changes)

    def manifest(self) -> str:
        lines = [
            f"param={self.param}",
            "values=" + ",".join(repr(v) for v in self.values),
            f"graphs_per_value={self.graphs_per_value}",
            f"embeddings_per_graph={self.embeddings_per_graph}",
            "algos=" + ";".join(f"{a}:" + ",".join(str(d) for d in dims) for a, dims in self.algos),
            f"seed={self.seed}",
            f"clusterer={self.clusterer}",
            "embed_options=" + json.dumps(self.embed_options, sort_keys=True),
        ]
        base = "".join(f"base.{ln}\n" for ln in self.base.manifest().splitlines())
        return "\n".join(lines) + "\n" + base


def _embedding_jobs(spec: SweepSpec):
    for ai, (algo, dims) in enumerate(spec.algos):
        for dim in dims:
            for r in range(spec.embeddings_per_graph):
                yield ai, algo, int(dim), r


def _job_key(vi: int, gi: int, algo: str, dim: int, r: int) -> str:
    return f"{vi}/{gi}/{algo}/{dim}/{r}"


def _run_graph(spec: SweepSpec, vi: int, gi: int, todo: list) -> list[dict]:
    """Generate one graph, cluster it, then embed and score the requested jobs."""
    value = spec.values[vi]
    graph_seed = derive_seed(spec.seed, vi, gi)
    params = replace(spec.params_for(value), seed=graph_seed)
    gen = generate_abcd(params)
    g = gen.graph
    part = cluster(g, spec.clusterer, np.random.default_rng(derive_seed(graph_seed, 1)))
    scorer = DivergenceScorer(g, part, clusterer=spec.clusterer)
    out = []
    for ai, algo, dim, r in todo:
        emb_seed = derive_seed(spec.seed, vi, gi, ai, dim, r)
        t0 = time.perf_counter()
        emb = embed(g, algo, dim, np.random.default_rng(emb_seed), **spec.embed_options.get(algo, {}))
        seconds = time.perf_counter() - t0
        rep = scorer.score(emb)
        out.append({
            "key": _job_key(vi, gi, algo, dim, r),
            "graph_seed": graph_seed,
            "embedding_seed": emb_seed,
            "row": {
                "param": spec.param, "value": repr(value), "graph": gi, "algo": algo,
                "dim": dim, "replicate": r, "graph_seed": graph_seed,
                "embedding_seed": emb_seed, "divergence": repr(rep.score),
                "best_alpha": repr(rep.best_alpha), "converged": int(rep.all_converged),
            },
            "seconds": seconds,
        })
    return out


def _read_ledger(path: Path) -> dict:
    done = {}
    if path.exists():
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    rec = json.loads(line)
                    done[rec["key"]] = rec
    return done


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _std(x: np.ndarray) -> float:
    return float(np.std(x, ddof=1)) if x.size > 1 else 0.0


def aggregate(rows: list[dict]) -> tuple[list, list, list]:
    """(per value, per graph, variance decomposition) tables from raw rows."""
    by_value: dict = {}
    for row in rows:
        key = (row["value"], row["algo"], int(row["dim"]))
        by_value.setdefault(key, {}).setdefault(int(row["graph"]), []).append(float(row["divergence"]))
    agg, per_graph, var = [], [], []
    for (value, algo, dim), graphs in by_value.items():
        allv = np.array([v for vals in graphs.values() for v in vals])
        agg.append([value, algo, dim, allv.size, repr(float(allv.mean())), repr(_std(allv))])
        for gi in sorted(graphs):
            v = np.array(graphs[gi])
            per_graph.append([value, algo, dim, gi, v.size, repr(float(v.mean())), repr(_std(v))])
        width = {len(v) for v in graphs.values()}
        if len(width) == 1:
            vd = variance_decomposition([graphs[gi] for gi in sorted(graphs)])
            var.append([value, algo, dim, repr(vd.ss_t), repr(vd.ss_g), repr(vd.ss_e), repr(vd.r_e)])
    return agg, per_graph, var


def emit_heatmap_csv(rows: list[dict], group_by=("algo", "dim")) -> tuple[str, str]:
    """Mean and std divergence matrices (rows: first key, columns: second key).

    Cells without data are left empty.
    """
    if not rows:
        raise ValueError("no results to tabulate")
    rk, ck = group_by
    cells: dict = {}
    for row in rows:
        cells.setdefault((row[rk], row[ck]), []).append(float(row["divergence"]))

    def sort_key(v):
        try:
            return (0, float(v), "")
        except (TypeError, ValueError):
            return (1, 0.0, str(v))

    rlabels = sorted({k[0] for k in cells}, key=sort_key)
    clabels = sorted({k[1] for k in cells}, key=sort_key)
    out = []
    for stat in (lambda v: float(np.mean(v)), lambda v: _std(np.array(v))):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"{rk}\\{ck}", *clabels])
        for r in rlabels:
            w.writerow([r, *(repr(stat(cells[(r, c)])) if (r, c) in cells else ""
                             for c in clabels)])
        out.append(buf.getvalue())
    return out[0], out[1]


def run_sweep(spec: SweepSpec, out_dir, workers: int = 1) -> list[dict]:
    """Run (or resume) a sweep and write its output files into ``out_dir``.

    Files: manifest.txt, results.csv, aggregates.csv, per_graph.csv,
    variance.csv, heatmap_mean.csv, heatmap_std.csv, timings.csv, ledger.jsonl.
    """
    spec.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = spec.manifest()
    mpath = out / "manifest.txt"
    if mpath.exists() and mpath.read_text(encoding="utf-8") != manifest:
        raise SweepResumeError(f"{mpath} belongs to a different sweep")
    mpath.write_text(manifest, encoding="utf-8")
    ledger_path = out / "ledger.jsonl"
    done = _read_ledger(ledger_path)

    tasks = []
    for vi in range(len(spec.values)):
        for gi in range(spec.graphs_per_value):
            gseed = derive_seed(spec.seed, vi, gi)
            todo = []
            for ai, algo, dim, r in _embedding_jobs(spec):
                rec = done.get(_job_key(vi, gi, algo, dim, r))
                eseed = derive_seed(spec.seed, vi, gi, ai, dim, r)
                if rec is None:
                    todo.append((ai, algo, dim, r))
                elif rec["graph_seed"] != gseed or rec["embedding_seed"] != eseed:
                    raise SweepResumeError(f"ledger entry {rec['key']} was run with different seeds")
            if todo:
                tasks.append((vi, gi, todo))

    with open(ledger_path, "a", encoding="utf-8") as ledger:
        def record(recs):
            for rec in recs:
                ledger.write(json.dumps(rec, sort_keys=True) + "\n")
                done[rec["key"]] = rec
            ledger.flush()
            os.fsync(ledger.fileno())

        if workers > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(_run_graph, spec, *t) for t in tasks]
                for fut in futures:
                    record(fut.result())
        else:
            for t in tasks:
                record(_run_graph(spec, *t))

    ordered = []
    for vi in range(len(spec.values)):
        for gi in range(spec.graphs_per_value):
            for _, algo, dim, r in _embedding_jobs(spec):
                ordered.append(done[_job_key(vi, gi, algo, dim, r)])
    rows = [rec["row"] for rec in ordered]
    _write_csv(out / "results.csv", RESULT_COLUMNS, [[row[c] for c in RESULT_COLUMNS] for row in rows])
    _write_csv(out / "timings.csv", ("key", "seconds"),
               [[rec["key"], f"{rec['seconds']:.6f}"] for rec in ordered])
    agg, per_graph, var = aggregate(rows)
    _write_csv(out / "aggregates.csv", ("value", "algo", "dim", "count", "mean", "std"), agg)
    _write_csv(out / "per_graph.csv", ("value", "algo", "dim", "graph", "count", "mean", "std"),
               per_graph)
    _write_csv(out / "variance.csv", ("value", "algo", "dim", "ss_t", "ss_g", "ss_e", "r_e"), var)
    mean_csv, std_csv = emit_heatmap_csv(rows)
    (out / "heatmap_mean.csv").write_text(mean_csv, encoding="utf-8")
    (out / "heatmap_std.csv").write_text(std_csv, encoding="utf-8")
    return rows
