"""
Deterministic graph generators.

The fixed families come from networkx; the Barabasi-Albert generator is
implemented here on numpy's PCG64 stream so that a seed pins the edge list
independently of the installed networkx version.
"""

import logging
from typing import List, Optional, Tuple

import networkx as nx
import numpy as np

from .errors import InvalidParams
from .graph import CombinatorialGraph, MetricGraph, assign_lengths, build_graph, random_lengths

logger = logging.getLogger(__name__)

KINDS = ("star", "path", "cycle", "diamond", "barabasi_albert")
ALIASES = {"ba": "barabasi_albert"}


def _random_subset(repeated_nodes: List[int], k: int, rng: np.random.Generator) -> List[int]:
    # Sampling from the degree-weighted list until k distinct targets are
    # drawn is preferential attachment without replacement.
    targets = set()
    while len(targets) < k:
        targets.add(repeated_nodes[int(rng.integers(len(repeated_nodes)))])
    return sorted(targets)


def barabasi_albert_edges(n: int, k: int, seed: int) -> List[Tuple[int, int]]:
    """
    Edge list of a Barabasi-Albert graph with n vertices and (n - k) * k edges.

    Vertices 0..k-1 start isolated; vertex k attaches to all of them and every
    later vertex attaches k edges by preferential attachment.
    """
    if k < 1 or k >= n:
        raise InvalidParams(f"Barabasi-Albert graph needs 1 <= k < n, got k={k}, n={n}")
    rng = np.random.Generator(np.random.PCG64(seed))
    edges = [(target, k) for target in range(k)]
    repeated_nodes = list(range(k)) + [k] * k
    for source in range(k + 1, n):
        targets = _random_subset(repeated_nodes, k, rng)
        edges.extend((target, source) for target in targets)
        repeated_nodes.extend(targets)
        repeated_nodes.extend([source] * k)
    return edges


def _from_networkx(graph: nx.Graph) -> CombinatorialGraph:
    return build_graph(graph.number_of_nodes(), list(graph.edges()))


def generate(kind: str, n: Optional[int] = None, k: Optional[int] = None,
             seed: int = 0) -> CombinatorialGraph:
    """
    Generate a combinatorial graph of the given family.

    Args:
        kind: One of star, path, cycle, diamond, barabasi_albert (alias ba)
        n: Vertex count (not used by diamond)
        k: Edges per new vertex for barabasi_albert
        seed: Seed for the random families

    Returns:
        CombinatorialGraph: The generated graph

    Raises:
        InvalidParams: If the kind is unknown or its parameters are invalid
    """
    kind = ALIASES.get(kind, kind)
    if kind not in KINDS:
        raise InvalidParams(f"Unknown graph kind '{kind}'; expected one of {', '.join(KINDS)}")

    if kind == "diamond":
        return _from_networkx(nx.diamond_graph())
    if n is None:
        raise InvalidParams(f"Graph kind '{kind}' requires n")

    if kind == "star":
        if n < 2:
            raise InvalidParams(f"A star needs at least 2 vertices, got {n}")
        return _from_networkx(nx.star_graph(n - 1))
    if kind == "path":
        if n < 2:
            raise InvalidParams(f"A path needs at least 2 vertices, got {n}")
        return _from_networkx(nx.path_graph(n))
    if kind == "cycle":
        if n < 3:
            raise InvalidParams(f"A cycle needs at least 3 vertices, got {n}")
        return _from_networkx(nx.cycle_graph(n))

    if k is None:
        raise InvalidParams("barabasi_albert requires k")
    graph = build_graph(n, barabasi_albert_edges(n, k, seed))
    logger.debug("Generated Barabasi-Albert graph n=%d k=%d seed=%d with m=%d", n, k, seed, graph.m)
    return graph


def generate_metric(kind: str, n: Optional[int] = None, k: Optional[int] = None, seed: int = 0,
                    low: float = 1.0, high: float = 2.0, decimals: int = 3) -> MetricGraph:
    """Generate a graph and draw its edge lengths from the same seed."""
    graph = generate(kind, n=n, k=k, seed=seed)
    return assign_lengths(graph, random_lengths(graph.m, low, high, decimals, seed))
