"""
Combinatorial, metric and extended graphs.

This module provides the immutable graph models the solver works on, plus the
cleaning and extension transformations that equilateral approximation is
built from. Vertices are 0-based everywhere, including the JSON file format.
"""

import json
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import (
    AllDegreeTwo,
    Disconnected,
    DuplicateEdge,
    GraphFormatError,
    InvalidParams,
    LengthCountMismatch,
    NonPositiveLength,
    NonSimpleCleaning,
    NotEquilateral,
    NotRepresentable,
    SelfLoop,
    VertexOutOfRange,
)

logger = logging.getLogger(__name__)

ARTIFICIAL = -1


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class CombinatorialGraph:
    """
    A simple, connected, undirected graph.

    Edges are stored as an (m, 2) integer array whose rows are (i, j) with
    i < j. Build instances through build_graph(), which validates them.
    """
    n: int
    edges: np.ndarray

    @property
    def m(self) -> int:
        return int(self.edges.shape[0])

    @cached_property
    def degrees(self) -> np.ndarray:
        return _frozen(np.bincount(self.edges.ravel(), minlength=self.n))

    @cached_property
    def incidence(self) -> Tuple[Tuple[int, ...], ...]:
        """Incident edge indices per vertex, in ascending edge order."""
        incident: List[List[int]] = [[] for _ in range(self.n)]
        for e, (i, j) in enumerate(self.edges.tolist()):
            incident[i].append(e)
            incident[j].append(e)
        return tuple(tuple(row) for row in incident)

    def degree(self, v: int) -> int:
        return int(self.degrees[v])

    def neighbors(self, v: int) -> List[int]:
        result = []
        for e in self.incidence[v]:
            i, j = self.edges[e]
            result.append(int(j if i == v else i))
        return result

    def edge_list(self) -> List[Tuple[int, int]]:
        return [(int(i), int(j)) for i, j in self.edges]

    def adjacency_matrix(self) -> sp.csr_matrix:
        """Symmetric 0/1 adjacency matrix in CSR format."""
        i, j = self.edges[:, 0], self.edges[:, 1]
        rows = np.concatenate([i, j])
        cols = np.concatenate([j, i])
        data = np.ones(rows.shape[0])
        return sp.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n))
        graph.add_edges_from(self.edge_list())
        return graph


@dataclass(frozen=True, eq=False)
class MetricGraph:
    """A combinatorial graph with a positive length on every edge."""
    graph: CombinatorialGraph
    lengths: np.ndarray

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def m(self) -> int:
        return self.graph.m

    @property
    def edges(self) -> np.ndarray:
        return self.graph.edges

    @property
    def total_length(self) -> float:
        return math.fsum(self.lengths.tolist())

    def to_dict(self) -> Dict[str, Any]:
        """Convert to the graph JSON representation."""
        return {
            "n": self.n,
            "edges": [list(edge) for edge in self.graph.edge_list()],
            "lengths": [float(length) for length in self.lengths],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'MetricGraph':
        """Create from the graph JSON representation."""
        try:
            n = int(data["n"])
            edges = [tuple(int(v) for v in edge) for edge in data["edges"]]
            lengths = [float(length) for length in data["lengths"]]
        except (KeyError, TypeError, ValueError) as e:
            raise GraphFormatError(f"Malformed graph data: {e}")
        if any(len(edge) != 2 for edge in edges):
            raise GraphFormatError("Every edge must be a pair of vertex indices")
        return assign_lengths(build_graph(n, edges), lengths)


@dataclass(frozen=True, eq=False)
class ExtendedGraph:
    """
    A metric graph obtained by inserting artificial degree-2 vertices.

    Attributes:
        metric: The subdivided metric graph. Original vertices keep their
            indices; artificial vertices are numbered after them.
        origin_edge: For each sub-edge, the index of the original edge.
        original_vertex: For each vertex, its original index or ARTIFICIAL.
        counts: Number of sub-edges N_e per original edge.
        chains: Per original edge (v_i, v_j), the vertex sequence from v_i
            to v_j through the artificial vertices.
    """
    metric: MetricGraph
    origin_edge: np.ndarray
    original_vertex: np.ndarray
    counts: np.ndarray
    chains: Tuple[np.ndarray, ...]

    @property
    def n_original(self) -> int:
        return int(np.count_nonzero(self.original_vertex != ARTIFICIAL))

    @property
    def is_equilateral(self) -> bool:
        lengths = self.metric.lengths
        return bool(np.max(lengths) - np.min(lengths) <= 1e-9 * np.max(lengths))

    @property
    def step(self) -> float:
        """The common sub-edge length h of an equilateral extended graph."""
        if not self.is_equilateral:
            raise NotEquilateral(
                f"Sub-edge lengths range over [{np.min(self.metric.lengths)!r}, "
                f"{np.max(self.metric.lengths)!r}]"
            )
        return float(np.median(self.metric.lengths))


def build_graph(n: int, edges: Sequence[Sequence[int]]) -> CombinatorialGraph:
    """
    Build and validate a combinatorial graph.

    Args:
        n: Number of vertices
        edges: Unordered vertex pairs (v_i, v_j), 0 <= v < n

    Returns:
        CombinatorialGraph: The validated graph

    Raises:
        VertexOutOfRange, SelfLoop, DuplicateEdge, Disconnected
    """
    if n < 1:
        raise Disconnected(f"A graph needs at least one vertex, got n={n}")
    array = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if array.shape[0] == 0:
        raise Disconnected("A graph needs at least one edge")
    if array.min() < 0 or array.max() >= n:
        raise VertexOutOfRange(f"Edge endpoints must lie in [0, {n})")
    loops = np.flatnonzero(array[:, 0] == array[:, 1])
    if loops.size:
        raise SelfLoop(f"Edge {int(loops[0])} joins vertex {int(array[loops[0], 0])} to itself")

    array = np.sort(array, axis=1)
    keys = array[:, 0] * n + array[:, 1]
    unique, first, counts = np.unique(keys, return_index=True, return_counts=True)
    if unique.shape[0] != keys.shape[0]:
        duplicate = int(unique[np.argmax(counts > 1)])
        raise DuplicateEdge(f"Edge ({duplicate // n}, {duplicate % n}) appears more than once")

    graph = CombinatorialGraph(n=int(n), edges=_frozen(np.ascontiguousarray(array)))
    n_components, _ = connected_components(graph.adjacency_matrix(), directed=False)
    if n_components != 1:
        raise Disconnected(f"Graph has {n_components} connected components")
    return graph


def assign_lengths(graph: CombinatorialGraph, lengths: Sequence[float]) -> MetricGraph:
    """
    Bind positive edge lengths to a combinatorial graph.

    Raises:
        LengthCountMismatch: If len(lengths) differs from the edge count
        NonPositiveLength: If a length is zero, negative or not finite
    """
    array = np.asarray(lengths, dtype=float).ravel()
    if array.shape[0] != graph.m:
        raise LengthCountMismatch(f"Got {array.shape[0]} lengths for {graph.m} edges")
    bad = np.flatnonzero(~np.isfinite(array) | (array <= 0))
    if bad.size:
        raise NonPositiveLength(f"Edge {int(bad[0])} has length {array[bad[0]]!r}")
    return MetricGraph(graph=graph, lengths=_frozen(array.copy()))


def metric_graph(n: int, edges: Sequence[Sequence[int]], lengths: Sequence[float]) -> MetricGraph:
    """Shorthand for assign_lengths(build_graph(n, edges), lengths)."""
    return assign_lengths(build_graph(n, edges), lengths)


def clean(g: Union[MetricGraph, ExtendedGraph]) -> MetricGraph:
    """
    Eliminate all degree-2 vertices by merging their incident edges.

    An ExtendedGraph is cleaned through its subdivided metric graph, which
    undoes extend().

    Each maximal chain through degree-2 vertices becomes one edge whose length
    is the sum of the chain lengths. Remaining vertices keep their relative
    order; edges are ordered by the smallest edge index in their chain.

    Raises:
        AllDegreeTwo: If every vertex has degree two (a pure cycle)
        NonSimpleCleaning: If a chain closes on itself or two chains join
            the same pair of vertices
    """
    if isinstance(g, ExtendedGraph):
        g = g.metric
    graph = g.graph
    degrees = graph.degrees
    anchors = np.flatnonzero(degrees != 2)
    if anchors.size == 0:
        raise AllDegreeTwo("Every vertex has degree two; a pure cycle cannot be cleaned")
    if anchors.size == graph.n:
        return g

    new_index = {int(v): k for k, v in enumerate(anchors)}
    incidence = graph.incidence
    edges = graph.edges
    visited = np.zeros(graph.m, dtype=bool)
    chains = []

    for anchor in anchors.tolist():
        for start in incidence[anchor]:
            if visited[start]:
                continue
            prev, edge = anchor, start
            members = []
            while True:
                visited[edge] = True
                members.append(edge)
                i, j = edges[edge]
                nxt = int(j if i == prev else i)
                if degrees[nxt] != 2:
                    break
                first, second = incidence[nxt]
                edge = second if first == edge else first
                prev = nxt
            if nxt == anchor:
                raise NonSimpleCleaning(f"Chain starting at edge {start} closes on vertex {anchor}")
            chains.append((min(members), new_index[anchor], new_index[nxt],
                           math.fsum(g.lengths[members].tolist())))

    chains.sort()
    new_edges = [(a, b) for _, a, b, _ in chains]
    new_lengths = [length for _, _, _, length in chains]
    try:
        cleaned = build_graph(int(anchors.size), new_edges)
    except DuplicateEdge as e:
        raise NonSimpleCleaning(f"Cleaning produces parallel edges: {e}")
    logger.debug("Cleaned %d vertices / %d edges down to %d / %d",
                 graph.n, graph.m, cleaned.n, cleaned.m)
    return assign_lengths(cleaned, new_lengths)


def extend(g: MetricGraph, subdivisions: Sequence[int]) -> ExtendedGraph:
    """
    Subdivide every edge e into N_e sub-edges of length l_e / N_e.

    Args:
        g: The metric graph to extend
        subdivisions: Positive integer N_e per edge

    Returns:
        ExtendedGraph: The subdivided graph with provenance
    """
    counts = np.asarray(subdivisions, dtype=np.int64).ravel()
    if counts.shape[0] != g.m:
        raise LengthCountMismatch(f"Got {counts.shape[0]} subdivision counts for {g.m} edges")
    if counts.size and counts.min() < 1:
        raise InvalidParams("Subdivision counts must be at least 1")

    n_total = g.n + int(np.sum(counts - 1))
    sub_edges = np.empty((int(np.sum(counts)), 2), dtype=np.int64)
    sub_lengths = np.empty(sub_edges.shape[0])
    origin = np.empty(sub_edges.shape[0], dtype=np.int64)
    chains = []

    next_vertex = g.n
    cursor = 0
    for e, ((i, j), count) in enumerate(zip(g.edges.tolist(), counts.tolist())):
        inner = np.arange(next_vertex, next_vertex + count - 1, dtype=np.int64)
        chain = np.concatenate(([i], inner, [j])).astype(np.int64)
        next_vertex += count - 1
        sub_edges[cursor:cursor + count, 0] = chain[:-1]
        sub_edges[cursor:cursor + count, 1] = chain[1:]
        sub_lengths[cursor:cursor + count] = g.lengths[e] / count
        origin[cursor:cursor + count] = e
        cursor += count
        chains.append(_frozen(chain))

    original_vertex = np.full(n_total, ARTIFICIAL, dtype=np.int64)
    original_vertex[:g.n] = np.arange(g.n)
    metric = assign_lengths(build_graph(n_total, sub_edges), sub_lengths)
    return ExtendedGraph(
        metric=metric,
        origin_edge=_frozen(origin),
        original_vertex=_frozen(original_vertex),
        counts=_frozen(counts.copy()),
        chains=tuple(chains),
    )


def _scaled_integers(lengths: np.ndarray, decimal_digits: int) -> np.ndarray:
    if decimal_digits < 0:
        raise InvalidParams("decimal_digits must be non-negative")
    scaled = lengths * (10 ** decimal_digits)
    rounded = np.rint(scaled)
    off_grid = np.flatnonzero(np.abs(scaled - rounded) > 1e-9 * np.maximum(1.0, scaled))
    if off_grid.size:
        e = int(off_grid[0])
        raise NotRepresentable(
            f"Length {lengths[e]!r} of edge {e} is not a multiple of 1e-{decimal_digits}"
        )
    integers = rounded.astype(np.int64)
    if integers.min() <= 0:
        raise NotRepresentable(f"Some length rounds to zero at {decimal_digits} decimal digits")
    return integers


def gcd_representation(g: MetricGraph, decimal_digits: int) -> ExtendedGraph:
    """
    Equilateral extended graph whose step is the gcd of the edge lengths.

    Lengths are scaled by 10**decimal_digits and compared as integers, so the
    gcd is exact on the decimal grid.

    Raises:
        NotRepresentable: If a length is not on the decimal grid
    """
    integers = _scaled_integers(g.lengths, decimal_digits)
    common = int(np.gcd.reduce(integers))
    counts = integers // common
    logger.debug("gcd representation: h=%s, %d sub-edges",
                 common / 10 ** decimal_digits, int(counts.sum()))
    return extend(g, counts)


def random_lengths(m: int, low: float, high: float, decimals: int, seed: int) -> Tuple[float, ...]:
    """
    Draw m uniform edge lengths in [low, high] rounded to `decimals` digits.

    Uses numpy's PCG64 bit generator, whose stream for a given seed is fixed
    across platforms and numpy versions.
    """
    if m < 1:
        raise InvalidParams("At least one length is required")
    if low < 0 or high < low:
        raise InvalidParams(f"Invalid length interval [{low}, {high}]")
    if decimals < 0:
        raise InvalidParams("decimals must be non-negative")
    rng = np.random.Generator(np.random.PCG64(seed))
    values = np.round(rng.uniform(low, high, size=m), decimals)
    return tuple(float(v) for v in values)


def load_graph(path: Union[str, Path]) -> MetricGraph:
    """Read a metric graph from a graph JSON file."""
    with open(path, 'r', encoding='utf-8') as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise GraphFormatError(f"{path} is not valid JSON: {e}")
    return MetricGraph.from_dict(data)


def dump_graph(g: MetricGraph) -> str:
    return json.dumps(g.to_dict(), indent=2) + "\n"


def save_graph(g: MetricGraph, path: Optional[Union[str, Path]]) -> str:
    """Write a metric graph as graph JSON; returns the serialized text."""
    content = dump_graph(g)
    if path:
        output_path = Path(path)
        output_path.parent.mkdir(parents=True, exist_ok=True)
        output_path.write_text(content, encoding='utf-8')
    return content
