"""
Graph controller: generation of metric graphs and their export.
"""

from typing import Any, Dict, List, Optional, Tuple

from lib.errors import QGraphError
from lib.generators import generate
from lib.graph import MetricGraph, assign_lengths, dump_graph, random_lengths

from . import BaseController, ControllerError


class GraphController(BaseController):
    """Controller for graph generation."""

    def generate(self, kind: str, n: Optional[int] = None, k: Optional[int] = None, seed: int = 0,
                 length_range: Optional[Tuple[float, float]] = None, decimals: Optional[int] = None,
                 output_file: Optional[str] = None, format_type: str = "table") -> str:
        """
        Generate a metric graph with seeded random edge lengths.

        Args:
            kind: Graph family (star, path, cycle, diamond, ba)
            n: Vertex count
            k: Attachment count for ba
            seed: Seed for structure and lengths
            length_range: (low, high) for the uniform lengths
            decimals: Decimal digits the lengths are rounded to
            output_file: Graph JSON destination
            format_type: Output format for the terminal (table, json, csv)

        Returns:
            Formatted description of the generated graph
        """
        low, high = length_range or (self.config.get_value("generate", "length_low", 1.0),
                                     self.config.get_value("generate", "length_high", 2.0))
        if decimals is None:
            decimals = self.config.get_value("generate", "decimals", 3)
        try:
            graph = generate(kind, n=n, k=k, seed=seed)
            metric = assign_lengths(graph, random_lengths(graph.m, low, high, decimals, seed))
        except (QGraphError, ValueError) as e:
            raise ControllerError(f"Error generating graph: {e}")

        if output_file:
            self._export(dump_graph(metric), output_file)
        return self._describe(metric, format_type, output_file)

    def _describe(self, metric: MetricGraph, format_type: str, output_file: Optional[str]) -> str:
        if format_type.lower() == "json":
            return dump_graph(metric).rstrip("\n")
        rows: List[Dict[str, Any]] = [
            {"edge": e, "u": int(u), "v": int(v), "length": float(length)}
            for e, ((u, v), length) in enumerate(zip(metric.edges.tolist(), metric.lengths))
        ]
        headers = ["edge", "u", "v", "length"]
        if format_type.lower() == "csv":
            return self._format_as_csv(rows, headers).rstrip("\n")
        summary = (f"Graph with {metric.n} vertices and {metric.m} edges, "
                   f"total length {metric.total_length:.6g}")
        if output_file:
            summary += f"\nSaved to {output_file}"
        return summary + "\n\n" + self._format_as_table(rows, headers)
