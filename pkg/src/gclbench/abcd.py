"""ABCD benchmark graphs: power-law degrees and community sizes, mixing parameter xi.

Each community gets its own random graph on the internal degrees ``y``; a
background graph on the remaining degrees ``z`` spans all nodes.  The union is
rewired to a simple graph without changing any degree.
"""
from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field

import numpy as np

from .graph import Graph, Partition
from .seeding import as_rng

logger = logging.getLogger(__name__)

DEFAULT_FRACTIONS = (0.30, 0.25, 0.20, 0.15, 0.10)


class RewiringError(RuntimeError):
    pass


def natural_cutoff(n: int, gamma: float) -> int:
    return int(round(n ** (1.0 / (gamma - 1.0))))


@dataclass
class AbcdParams:
    n: int = 10_000
    gamma: float = 2.5
    delta_min: int = 5
    delta_max: int | None = None  # None -> natural cut-off round(n^(1/(gamma-1)))
    beta: float = 1.5
    s_min: int = 50
    s_max: int = 1000
    xi: float = 0.2
    variant: str = "global"
    community_model: str = "configuration"
    fixed_community_fractions: tuple[float, ...] | None = DEFAULT_FRACTIONS
    seed: int = 0

    def __post_init__(self):
        if self.gamma <= 1 or self.beta <= 1:
            raise ValueError("gamma and beta must exceed 1")
        if self.delta_max is None:
            self.delta_max = min(natural_cutoff(self.n, self.gamma), self.n - 1)
        if self.fixed_community_fractions is not None:
            self.fixed_community_fractions = tuple(float(f) for f in self.fixed_community_fractions)
        self.validate()

    def validate(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.gamma <= 1 or self.beta <= 1:
            raise ValueError("gamma and beta must exceed 1")
        if not 1 <= self.delta_min <= self.delta_max <= self.n - 1:
            raise ValueError(f"need 1 <= delta_min <= delta_max <= n-1, got "
                             f"{self.delta_min}, {self.delta_max}, n={self.n}")
        if self.fixed_community_fractions is None and not 2 <= self.s_min <= self.s_max <= self.n:
            raise ValueError(f"need 2 <= s_min <= s_max <= n, got {self.s_min}, {self.s_max}")
        if not 0.0 <= self.xi <= 1.0:
            raise ValueError("xi must lie in [0, 1]")
        if self.variant not in ("global", "local"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.community_model not in ("configuration", "chung_lu"):
            raise ValueError(f"unknown community model {self.community_model!r}")
        fr = self.fixed_community_fractions
        if fr is not None:
            if any(f <= 0 for f in fr) or abs(sum(fr) - 1.0) > 1e-9:
                raise ValueError("community fractions must be positive and sum to 1")

    def manifest(self) -> str:
        """``key=value`` lines describing the parameter record."""
        lines = []
        for k, v in asdict(self).items():
            if isinstance(v, (tuple, list)):
                v = ",".join(repr(x) for x in v)
            lines.append(f"{k}={v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_manifest(cls, text: str) -> "AbcdParams":
        raw = dict(line.split("=", 1) for line in text.splitlines() if "=" in line)
        kw = {}
        for name, f in cls.__dataclass_fields__.items():
            if name not in raw:
                continue
            v = raw[name]
            if name == "fixed_community_fractions":
                kw[name] = None if v == "None" else tuple(float(x) for x in v.split(","))
            elif name in ("variant", "community_model"):
                kw[name] = v
            elif name == "delta_max":
                kw[name] = None if v == "None" else int(v)
            elif name in ("gamma", "beta", "xi"):
                kw[name] = float(v)
            else:
                kw[name] = int(v)
        return cls(**kw)


@dataclass
class AbcdGraph:
    graph: Graph
    ground_truth: Partition
    realized_xi: float
    degrees: np.ndarray  # target degree of every node, equal to graph.degrees for configuration
    params: AbcdParams
    diagnostics: dict = field(default_factory=dict)


def sample_power_law(count: int, exponent: float, lo: int, hi: int, rng) -> np.ndarray:
    """i.i.d. integers on ``[lo, hi]`` with P(k) proportional to k^-exponent, sorted descending."""
    if lo > hi:
        raise ValueError(f"empty support: lo={lo} > hi={hi}")
    if count < 1:
        raise ValueError("count must be positive")
    rng = as_rng(rng)
    support = np.arange(lo, hi + 1, dtype=np.int64)
    cdf = np.cumsum(support.astype(np.float64) ** -exponent)
    cdf /= cdf[-1]
    idx = np.searchsorted(cdf, rng.random(count), side="right")
    return np.sort(support[np.minimum(idx, support.size - 1)])[::-1].copy()


def build_degree_sequence(params: AbcdParams, rng) -> np.ndarray:
    deg = sample_power_law(params.n, params.gamma, params.delta_min, params.delta_max, rng)
    if deg.sum() % 2:
        deg[-1] += 1  # a minimum-degree node
        deg = np.sort(deg)[::-1].copy()
    return deg


def _fixed_sizes(n: int, fractions) -> np.ndarray:
    raw = np.asarray(fractions) * n
    sizes = np.floor(raw).astype(np.int64)
    short = n - int(sizes.sum())
    sizes[np.argsort(-(raw - sizes), kind="stable")[:short]] += 1
    if np.any(sizes < 1):
        raise ValueError("a community fraction rounds to an empty community")
    return sizes


def sample_community_sizes(params: AbcdParams, rng) -> np.ndarray:
    """Power-law community sizes on ``[s_min, s_max]`` summing exactly to n."""
    n, lo, hi = params.n, params.s_min, params.s_max
    if lo > n:
        raise ValueError(f"s_min={lo} exceeds n={n}")
    rng = as_rng(rng)
    support = np.arange(lo, hi + 1, dtype=np.int64)
    cdf = np.cumsum(support.astype(np.float64) ** -params.beta)
    cdf /= cdf[-1]
    draws = []
    total = 0
    while total < n:
        s = int(support[min(np.searchsorted(cdf, rng.random(), side="right"), support.size - 1)])
        draws.append(s)
        total += s
    excess = total - n
    if excess:
        if draws[-1] - excess >= lo:
            draws[-1] -= excess
        else:
            draws.pop()
            deficit = n - sum(draws)
            order = sorted(range(len(draws)), key=lambda i: -draws[i])
            while deficit:
                grew = False
                for i in order:
                    if deficit == 0:
                        break
                    if draws[i] < hi:
                        draws[i] += 1
                        deficit -= 1
                        grew = True
                if not grew:
                    raise ValueError("cannot reach n without exceeding s_max")
    return np.asarray(draws, dtype=np.int64)


def community_sizes(params: AbcdParams, rng) -> np.ndarray:
    if params.fixed_community_fractions is not None:
        return _fixed_sizes(params.n, params.fixed_community_fractions)
    return sample_community_sizes(params, rng)


def assign_nodes(degrees, sizes, xi: float, rng) -> tuple[Partition, int]:
    """Place nodes (in decreasing degree order) into communities.

    A node of degree d may join a community of size s only if
    ceil((1 - xi) d) <= s - 1; among admissible communities it takes a uniformly
    random free slot.  Returns the partition and the number of nodes that had
    no admissible community and were put in the largest one with room.
    """
    degrees = np.asarray(degrees)
    sizes = np.asarray(sizes, dtype=np.int64)
    if sizes.sum() != degrees.size:
        raise ValueError("community sizes must sum to the number of nodes")
    rng = as_rng(rng)
    by_size = np.argsort(sizes, kind="stable")
    sorted_sizes = sizes[by_size]
    free = sizes.copy()
    labels = np.empty(degrees.size, dtype=np.int64)
    saturated = 0
    for v in np.argsort(-degrees, kind="stable"):
        need = math.ceil((1.0 - xi) * degrees[v] - 1e-9)
        cand = by_size[np.searchsorted(sorted_sizes, need + 1, side="left"):]
        room = free[cand]
        total = int(room.sum())
        if total == 0:
            open_ = np.flatnonzero(free > 0)
            c = open_[np.argmax(sizes[open_])]
            saturated += 1
        else:
            slot = int(rng.integers(total))
            c = cand[np.searchsorted(np.cumsum(room), slot, side="right")]
        labels[v] = c
        free[c] -= 1
    if saturated:
        logger.warning("%d nodes had no admissible community", saturated)
    return Partition(labels), saturated


def _snap(x: np.ndarray) -> np.ndarray:
    r = np.rint(x)
    return np.where(np.abs(x - r) < 1e-9, r, x)


def split_degrees(degrees, partition: Partition, xi: float, variant: str = "global", rng=None):
    """Split each degree into internal ``y`` and background ``z`` parts.

    Returns ``(y, z, xi_eff, degrees)``.  ``xi_eff`` holds the per-community
    mixing value (constant for the global variant).  Community parity is fixed
    by moving one stub between ``y`` and ``z`` on a member that has a
    background stub; a community with none (xi_eff = 0) instead loses one
    stub from its highest-degree member, so the returned ``degrees`` may
    differ from the input there.
    """
    rng = as_rng(rng)
    d = np.asarray(degrees, dtype=np.int64).copy()
    labels = partition.labels
    ell = partition.ell
    vol = np.bincount(labels, weights=d, minlength=ell)
    rho = vol / vol.sum()
    if variant == "global":
        xi_eff = np.full(ell, float(xi))
    elif variant == "local":
        with np.errstate(divide="ignore"):
            xi_eff = np.where(rho < 1.0, xi / np.maximum(1.0 - rho, 1e-300), 1.0)
        over = xi_eff > 1.0
        if over.any():
            logger.warning("local variant: xi clamped to 1 for %d communities", int(over.sum()))
            xi_eff[over] = 1.0
    else:
        raise ValueError(f"unknown variant {variant!r}")

    target = _snap((1.0 - xi_eff[labels]) * d)
    y = np.floor(target).astype(np.int64)
    y += rng.random(d.size) < (target - y)
    y = np.clip(y, 0, d)
    z = d - y

    sizes = partition.sizes
    for c in np.flatnonzero(np.bincount(labels, weights=y, minlength=ell).astype(np.int64) % 2):
        mem = np.flatnonzero(labels == c)
        up = mem[(z[mem] > 0) & (y[mem] < sizes[c] - 1)]
        if up.size:
            v = rng.choice(up)
            y[v] += 1
            z[v] -= 1
        else:
            v = mem[np.argmax(d[mem])]
            d[v] -= 1
            y[v] -= 1
    if z.sum() % 2:
        # only reachable when a parity fix changed a degree; drop one background stub
        v = np.flatnonzero(z)[np.argmax(d[z > 0])]
        z[v] -= 1
        d[v] -= 1
    return y, z, xi_eff, d


def configuration_edges(nodes, stubs, rng) -> np.ndarray:
    """Uniform perfect matching of half-edges; may contain loops and multi-edges."""
    half = np.repeat(np.asarray(nodes, dtype=np.int64), np.asarray(stubs, dtype=np.int64))
    if half.size % 2:
        raise ValueError("odd number of half-edges")
    rng.shuffle(half)
    return half.reshape(-1, 2)


def chung_lu_edges(nodes, weights, rng) -> np.ndarray:
    """Each pair u<v independently with probability min(1, w_u w_v / sum w)."""
    nodes = np.asarray(nodes, dtype=np.int64)
    w = np.asarray(weights, dtype=np.float64)
    total = w.sum()
    out = []
    if total <= 0:
        return np.empty((0, 2), dtype=np.int64)
    for i in range(nodes.size - 1):
        if w[i] == 0:
            continue
        p = np.minimum(1.0, w[i] * w[i + 1:] / total)
        hit = np.flatnonzero(rng.random(p.size) < p)
        if hit.size:
            out.append(np.column_stack([np.full(hit.size, nodes[i]), nodes[i + 1 + hit]]))
    return np.concatenate(out) if out else np.empty((0, 2), dtype=np.int64)


def _offense(key_is_loop: bool, count: int) -> int:
    return count if key_is_loop else max(count - 1, 0)


def rewire_to_simple(edges, n: int, rng, layers=None, max_stall: int = 100):
    """Swap endpoints of offending edges until the multigraph is simple.

    ``layers`` tags each edge with the random graph it came from (community id
    or -1 for background); swap partners are drawn from the same layer so
    community edges never leave their community.  A swap is kept if it
    strictly lowers the number of loops plus surplus parallel edges; once a
    full pass over the edge's layer brings no such swap, offense-neutral swaps are also
    kept so a stuck defect can migrate.  Gives up after ``max_stall`` passes
    without progress.  Degrees are preserved exactly.  Returns
    ``(edges, n_swaps)``.
    """
    rng = as_rng(rng)
    e = np.array(edges, dtype=np.int64).reshape(-1, 2)
    m = e.shape[0]
    layers = np.full(m, -1, dtype=np.int64) if layers is None else np.asarray(layers, dtype=np.int64)

    def key(u, v):
        return u * n + v if u <= v else v * n + u

    eu, ev = e[:, 0].tolist(), e[:, 1].tolist()
    by_key = defaultdict(list)
    for i in range(m):
        by_key[key(eu[i], ev[i])].append(i)
    bad = {k for k, lst in by_key.items() if _offense(k // n == k % n, len(lst)) > 0}
    if not bad:
        return e, 0

    layer_list = layers.tolist()
    layer_members = defaultdict(list)
    for i, lay in enumerate(layer_list):
        layer_members[lay].append(i)

    def count(k):
        lst = by_key.get(k)
        return len(lst) if lst else 0

    swaps = 0
    stall = 0
    stall_limit = max_stall * max(m, 1)
    while bad:
        bk = list(bad)[int(rng.integers(len(bad)))]
        copies = by_key[bk]
        bg = [i for i in copies if layer_list[i] < 0]
        pool = bg if (bg and len(copies) > 1 and bk // n != bk % n) else copies
        i = pool[int(rng.integers(len(pool)))]
        members = layer_members[layer_list[i]]
        if len(members) < 2:
            raise RewiringError(f"edge {eu[i], ev[i]} is the only edge of its layer; cannot rewire")
        j = i
        while j == i:
            j = members[int(rng.integers(len(members)))]
        a, b, c, d = eu[i], ev[i], eu[j], ev[j]
        if rng.random() < 0.5:
            na, nb = (a, c), (b, d)
        else:
            na, nb = (a, d), (b, c)
        old = [key(a, b), key(c, d)]
        new = [key(*na), key(*nb)]
        touched = set(old) | set(new)
        before = sum(_offense(k // n == k % n, count(k)) for k in touched)
        delta = {k: 0 for k in touched}
        for k in old:
            delta[k] -= 1
        for k in new:
            delta[k] += 1
        after = sum(_offense(k // n == k % n, count(k) + delta[k]) for k in touched)
        # after a full pass without progress, neutral swaps may move a defect around
        if after < before or (after == before and stall >= len(members)):
            by_key[old[0]].remove(i)
            by_key[old[1]].remove(j)
            eu[i], ev[i] = na
            eu[j], ev[j] = nb
            by_key[new[0]].append(i)
            by_key[new[1]].append(j)
            for k in touched:
                if not by_key[k]:
                    del by_key[k]
                    bad.discard(k)
                elif _offense(k // n == k % n, len(by_key[k])) > 0:
                    bad.add(k)
                else:
                    bad.discard(k)
            swaps += 1
            stall = 0 if after < before else stall + 1
        else:
            stall += 1
        if stall > stall_limit:
            raise RewiringError(
                f"no progress after {stall} attempts; {len(bad)} offending edge groups remain, "
                f"e.g. {(bk // n, bk % n)} x{len(by_key.get(bk, ()))}")
    out = np.column_stack([np.asarray(eu, dtype=np.int64), np.asarray(ev, dtype=np.int64)])
    return out, swaps


def realized_mixing(g: Graph, p: Partition) -> float:
    if g.m == 0:
        return 0.0
    e = g.edges()
    return float(np.mean(p.labels[e[:, 0]] != p.labels[e[:, 1]]))


def generate_abcd(params: AbcdParams, degrees=None) -> AbcdGraph:
    """Sample one ABCD graph; ``degrees`` overrides the sampled degree sequence."""
    params.validate()
    rng = np.random.default_rng(params.seed)
    deg = build_degree_sequence(params, rng) if degrees is None else np.sort(np.asarray(degrees, dtype=np.int64))[::-1].copy()
    if deg.size != params.n:
        raise ValueError("degree sequence length must equal n")
    if deg.sum() % 2:
        raise ValueError("degree sequence sum must be even")
    sizes = community_sizes(params, rng)
    part, saturated = assign_nodes(deg, sizes, params.xi, rng)
    y, z, xi_eff, deg = split_degrees(deg, part, params.xi, params.variant, rng)

    chunks, tags = [], []
    for c in range(part.ell):
        mem = part.members(c)
        if params.community_model == "configuration":
            ec = configuration_edges(mem, y[mem], rng)
        else:
            ec = chung_lu_edges(mem, y[mem], rng)
        chunks.append(ec)
        tags.append(np.full(ec.shape[0], c, dtype=np.int64))
    nodes = np.arange(params.n)
    if params.community_model == "configuration":
        eb = configuration_edges(nodes, z, rng)
    else:
        eb = chung_lu_edges(nodes, z, rng)
    chunks.append(eb)
    tags.append(np.full(eb.shape[0], -1, dtype=np.int64))
    edges = np.concatenate(chunks)
    layers = np.concatenate(tags)
    edges, swaps = rewire_to_simple(edges, params.n, rng, layers)
    g = Graph.from_edges(params.n, edges)
    if g.m != edges.shape[0]:
        raise RewiringError("rewiring left a non-simple graph")
    if params.community_model == "configuration" and not np.array_equal(g.degrees, deg):
        raise RewiringError("degree sequence not preserved")
    diag = {"saturated_nodes": saturated, "swaps": swaps, "xi_eff": xi_eff,
            "community_sizes": part.sizes.copy(), "internal_degrees": y, "background_degrees": z}
    return AbcdGraph(g, part, realized_mixing(g, part), deg, params, diag)
