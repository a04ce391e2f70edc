"""Embedding container and the plain-text embedding file format.

File layout: an optional header line ``n d`` followed by one line per node,
``node_id v1 ... vd``.  Rows may appear in any order.  Floats are written with
``repr`` so values round-trip bit-exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import GraphFormatError
from .seeding import as_rng


@dataclass
class Embedding:
    coords: np.ndarray
    name: str = field(default="", compare=False)

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=np.float64)
        if self.coords.ndim != 2 or self.coords.shape[0] < 1 or self.coords.shape[1] < 1:
            raise ValueError("embedding must be a non-empty n x d matrix")
        if not np.all(np.isfinite(self.coords)):
            raise ValueError("embedding has non-finite entries")

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def d(self) -> int:
        return self.coords.shape[1]

    def __eq__(self, other):
        return isinstance(other, Embedding) and np.array_equal(self.coords, other.coords)


def random_embedding(n: int, d: int, rng=None, name: str = "random") -> Embedding:
    """i.i.d. uniform points in the unit cube; a negative control."""
    return Embedding(as_rng(rng).random((n, d)), name=name)


def write_embedding(e: Embedding, path, ids=None) -> None:
    """Write with row ``i`` labelled ``ids[i]`` (default ``i``)."""
    labels = range(e.n) if ids is None else [int(i) for i in ids]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{e.n} {e.d}\n")
        for i, row in zip(labels, e.coords.tolist()):
            fh.write(f"{i} " + " ".join(repr(v) for v in row) + "\n")


def _is_int(tok: str) -> bool:
    try:
        int(tok)
    except ValueError:
        return False
    return True


def read_embedding(path, n: int | None = None, ids=None) -> Embedding:
    """Parse an embedding file, with or without the ``n d`` header.

    ``n`` (when given) is the expected node count; otherwise it is taken from
    the header or from the largest node id.  ``ids`` maps row ``i`` of the
    result to file node id ``ids[i]`` (for graphs whose ids were compacted).
    """
    with open(path, encoding="utf-8") as fh:
        rows = [(no, ln.split()) for no, ln in enumerate(fh, 1) if ln.strip()]
    if not rows:
        raise GraphFormatError(f"{path}: empty embedding file")
    header = None
    first = rows[0][1]
    if len(first) == 2 and all(_is_int(t) for t in first):
        hn, hd = int(first[0]), int(first[1])
        rest = rows[1:]
        if len(rest) == hn and all(len(t) == hd + 1 for _, t in rest):
            header = (hn, hd)
            rows = rest
    d = header[1] if header else len(rows[0][1]) - 1
    if d < 1:
        raise GraphFormatError(f"{path}:{rows[0][0]}: row has no coordinates")
    node_ids, vals = [], []
    for lineno, tok in rows:
        if len(tok) != d + 1:
            raise GraphFormatError(f"{path}:{lineno}: expected {d + 1} fields, got {len(tok)}")
        try:
            node_ids.append(int(tok[0]))
            vals.append([float(t) for t in tok[1:]])
        except ValueError:
            raise GraphFormatError(f"{path}:{lineno}: malformed number") from None
    if ids is not None:
        index = {int(v): i for i, v in enumerate(ids)}
        n = len(index)
    else:
        index = None
    size = n if n is not None else (header[0] if header else max(node_ids) + 1)
    coords = np.full((size, d), np.nan)
    seen = np.zeros(size, dtype=bool)
    for (lineno, _), node, v in zip(rows, node_ids, vals):
        i = node
        if index is not None:
            if i not in index:
                raise GraphFormatError(f"{path}:{lineno}: node id {i} is not in the graph")
            i = index[i]
        elif not 0 <= i < size:
            raise GraphFormatError(f"{path}:{lineno}: node id {i} outside 0..{size - 1}")
        if seen[i]:
            raise GraphFormatError(f"{path}:{lineno}: duplicate id {node}")
        seen[i] = True
        coords[i] = v
    if not seen.all():
        first = int(np.flatnonzero(~seen)[0])
        raise GraphFormatError(f"{path}: missing id {first if ids is None else int(ids[first])}")
    return Embedding(coords)
