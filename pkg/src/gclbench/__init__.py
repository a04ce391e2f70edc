"""Benchmarking node embeddings with the GCL divergence score on ABCD graphs."""
from ._core import BACKEND
from .abcd import AbcdGraph, AbcdParams, generate_abcd
from .clustering import ecg, louvain, modularity
from .divergence import DivergenceReport, DivergenceScorer, divergence_score, fit_gcl, js_divergence
from .embedders import deepwalk, hope_embed, node2vec
from .embedding import Embedding, random_embedding, read_embedding, write_embedding
from .graph import Graph, Partition, graph_stats, load_edge_list, load_partition

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "AbcdGraph", "AbcdParams", "generate_abcd", "ecg", "louvain", "modularity",
    "DivergenceReport", "DivergenceScorer", "divergence_score", "fit_gcl", "js_divergence",
    "deepwalk", "hope_embed", "node2vec", "Embedding", "random_embedding", "read_embedding",
    "write_embedding", "Graph", "Partition", "graph_stats", "load_edge_list", "load_partition",
]
