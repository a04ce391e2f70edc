"""Hot kernels, compiled when available.

The Cython extensions are used if they import; otherwise the numpy fallback in
:mod:`._fallback` is used.  Set ``GCLBENCH_BACKEND=python`` to force the
fallback.  ``BACKEND`` names the active implementation.
"""
import os

from . import _fallback as fallback

compiled = None
if os.environ.get("GCLBENCH_BACKEND", "").lower() != "python":
    try:
        from types import SimpleNamespace

        from . import _graph, _pairs, _walks

        compiled = SimpleNamespace(
            node2vec_walks=_walks.node2vec_walks,
            sgns_train=_walks.sgns_train,
            gcl_expected_degrees=_pairs.gcl_expected_degrees,
            gcl_block_sums=_pairs.gcl_block_sums,
            triangle_count=_graph.triangle_count,
            louvain_local_moves=_graph.louvain_local_moves,
        )
    except ImportError:
        compiled = None

kernels = compiled if compiled is not None else fallback
BACKEND = "cython" if compiled is not None else "python"

__all__ = ["BACKEND", "compiled", "fallback", "kernels"]
