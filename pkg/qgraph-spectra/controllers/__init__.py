"""
Controller package for the quantum graph spectral solver.

This package contains controller classes that bridge between
the CLI interface and the library layer.
"""

import csv
import io
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from tabulate import tabulate

from lib.config import ConfigManager
from lib.graph import MetricGraph, load_graph

logger = logging.getLogger(__name__)

FORMATS = ("table", "json", "csv")


class ControllerError(Exception):
    """Raised for faults the CLI reports with a nonzero exit code (IO, config, invalid input)."""
    pass


def parse_range(text: str, cast=float) -> Tuple[Any, Any]:
    """
    Parse an inclusive range written as 'a..b'.

    Raises:
        ValueError: If the text is not of that form or a > b
    """
    parts = text.split("..")
    if len(parts) != 2:
        raise ValueError(f"Expected a range of the form a..b, got '{text}'")
    low, high = cast(parts[0]), cast(parts[1])
    if low > high:
        raise ValueError(f"Range start {low} exceeds its end {high}")
    return low, high


class BaseController:
    """
    Shared configuration, graph loading, formatting and export.

    Args:
        config_path: Alternative config file; QGRAPH_CONFIG or the packaged
            config/config.json when None
    """

    def __init__(self, config_path: Optional[str] = None):
        try:
            self.config = ConfigManager(config_path)
        except (OSError, ValueError) as e:
            raise ControllerError(f"Cannot load configuration: {e}")

    def _sparse_threshold(self) -> int:
        return self.config.get_value("laplacian", "sparse_threshold", 500)

    def _boundary_tol(self) -> float:
        return self.config.get_value("equilateral", "boundary_tol", 1e-9)

    def _solver_options(self) -> Dict[str, Any]:
        """Keyword arguments for compute_spectrum from the nep and spectrum sections."""
        nep = self.config.section("nep")
        spectrum = self.config.section("spectrum")
        return {
            "rcond_tol": nep.get("rcond_tol", 1e-10),
            "maxit": nep.get("maxit", 1000),
            "pole_guard": nep.get("pole_guard", 1e-8),
            "max_halvings": nep.get("max_halvings", 30),
            "dedup_rtol": nep.get("dedup_rtol", 1e-8),
            "nullspace_rtol": nep.get("nullspace_rtol", 1e-8),
            "exact_rcond_limit": nep.get("exact_rcond_limit", 200),
            "guess_padding": spectrum.get("guess_padding", 4),
            "max_guess_rounds": spectrum.get("max_guess_rounds", 4),
            "sparse_threshold": self._sparse_threshold(),
        }

    def _load_graph(self, graph_file: str) -> MetricGraph:
        try:
            return load_graph(graph_file)
        except OSError as e:
            raise ControllerError(f"Cannot read graph file {graph_file}: {e}")

    def _format_as_table(self, rows: List[Dict[str, Any]], headers: Sequence[str]) -> str:
        table = [[row.get(header, "") for header in headers] for row in rows]
        return tabulate(table, headers=list(headers), tablefmt="grid", floatfmt=".12g")

    def _format_as_json(self, payload: Any) -> str:
        return json.dumps(payload, indent=2)

    def _format_as_csv(self, rows: List[Dict[str, Any]], headers: Sequence[str]) -> str:
        output = io.StringIO()
        writer = csv.DictWriter(output, fieldnames=list(headers), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({header: row.get(header, "") for header in headers})
        return output.getvalue()

    def _render(self, format_type: str, rows: List[Dict[str, Any]], headers: Sequence[str],
                payload: Any) -> str:
        format_type = format_type.lower()
        if format_type == "json":
            return self._format_as_json(payload)
        if format_type == "csv":
            return self._format_as_csv(rows, headers)
        return self._format_as_table(rows, headers)

    def _export(self, content: str, output_file: str) -> None:
        try:
            path = Path(output_file)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(content if content.endswith("\n") else content + "\n", encoding="utf-8")
        except OSError as e:
            raise ControllerError(f"Cannot write {output_file}: {e}")
        logger.info("Wrote %s", output_file)

    def _deliver(self, format_type: str, rows: List[Dict[str, Any]], headers: Sequence[str],
                 payload: Any, output_file: Optional[str], what: str) -> str:
        """Render for the terminal, or export to a file (tables are written as CSV)."""
        if not output_file:
            return self._render(format_type, rows, headers, payload)
        file_format = "csv" if format_type.lower() == "table" else format_type
        self._export(self._render(file_format, rows, headers, payload), output_file)
        return f"{what} exported successfully to {output_file}"
