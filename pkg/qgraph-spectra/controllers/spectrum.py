"""
Spectrum controller: Newton-trace spectra, reference spectra, approximation
sweeps and rcond scans.
"""

import logging
from typing import Any, Dict, List, Optional

import numpy as np

from lib.equilateral import (
    ceil_approximation,
    distance,
    equilateral_spectrum,
    floor_approximation,
    nested_spectra,
    reference_spectrum,
)
from lib.errors import QGraphError
from lib.nep import rcond_scan
from lib.spectrum import CSV_COLUMNS, UNCOVERED_BRACKET, compute_spectrum

from . import BaseController, ControllerError

logger = logging.getLogger(__name__)

REFERENCE_COLUMNS = ["index", "lambda", "mu", "branch", "flag"]
SWEEP_COLUMNS = ["J", "h", "q", "dist_floor", "dist_ceil", "lambda_floor", "lambda_ceil",
                 "lambda_ref", "err_floor", "err_ceil", "bracket_inverted"]
SCAN_COLUMNS = ["z", "rcond"]


class SpectrumController(BaseController):
    """Controller for spectrum computations."""

    def spectrum(self, graph_file: str, Q: int, h: Optional[float] = None,
                 exact_digits: Optional[int] = None, output_file: Optional[str] = None,
                 format_type: str = "table") -> str:
        """
        Compute the Q smallest eigenvalues of a graph.

        With h, the Newton-trace pipeline runs from floor/ceil guesses at step
        h. With exact_digits, the reference spectrum of the gcd representation
        on the 10^-digits grid is returned instead.
        """
        if (h is None) == (exact_digits is None):
            raise ControllerError("Give exactly one of --h and --exact-digits")
        graph = self._load_graph(graph_file)

        if exact_digits is not None:
            try:
                mapped = reference_spectrum(graph, exact_digits, Q, sparse_threshold=self._sparse_threshold(),
                                            boundary_tol=self._boundary_tol())
            except (QGraphError, ValueError) as e:
                raise ControllerError(f"Error computing reference spectrum: {e}")
            rows = [
                {"index": q, "lambda": entry.value, "mu": entry.mu, "branch": entry.branch, "flag": entry.flag}
                for q, entry in enumerate(mapped.entries, start=1)
            ]
            payload = {"Q": Q, "decimal_digits": exact_digits,
                       "eigenvalues": [float(v) for v in mapped.vertex_values()], "entries": rows}
            return self._deliver(format_type, rows, REFERENCE_COLUMNS, payload, output_file, "Spectrum")

        if h > float(np.min(graph.lengths)):
            raise ControllerError(f"--h {h} exceeds the shortest edge length {float(np.min(graph.lengths))}")
        try:
            result = compute_spectrum(graph, Q, h, **self._solver_options())
        except (QGraphError, ValueError) as e:
            raise ControllerError(f"Error computing spectrum: {e}")
        if not result.complete:
            gaps = sum(UNCOVERED_BRACKET in entry.flags for entry in result.missed)
            logger.warning("Spectrum incomplete: %d of %d eigenvalues, %d intervals without an eigenvalue",
                           len(result.eigenvalues), Q, gaps)
        return self._deliver(format_type, result.to_rows(), CSV_COLUMNS, result.to_dict(),
                             output_file, "Spectrum")

    def sweep(self, graph_file: str, Q: int, j_min: int, j_max: int, nested: bool = False,
              exact_digits: Optional[int] = None, output_file: Optional[str] = None,
              format_type: str = "table") -> str:
        """
        Floor/ceil estimates for h = 2^-J, J = j_min..j_max, per eigenvalue index.

        Errors against the reference spectrum are included when exact_digits
        is given. Levels whose h exceeds the shortest edge are skipped.
        """
        graph = self._load_graph(graph_file)
        sparse_threshold = self._sparse_threshold()
        boundary_tol = self._boundary_tol()
        reference = None
        try:
            if exact_digits is not None:
                reference = reference_spectrum(graph, exact_digits, Q, sparse_threshold=sparse_threshold,
                                               boundary_tol=boundary_tol).vertex_values()
            levels = [J for J in range(j_min, j_max + 1) if 2.0 ** -J <= float(np.min(graph.lengths))]
            skipped = sorted(set(range(j_min, j_max + 1)) - set(levels))
            if skipped:
                logger.warning("Skipping J = %s: step exceeds the shortest edge", skipped)
            if nested:
                laplacian = self.config.section("laplacian")
                kwargs = dict(oversample=laplacian.get("nested_oversample", 2),
                              tol=laplacian.get("inverse_tol", 1e-10),
                              maxit=laplacian.get("inverse_maxit", 500),
                              sparse_threshold=sparse_threshold,
                              pivot_tol=laplacian.get("pivot_tol", 1e-14),
                              shift_perturbation=laplacian.get("shift_perturbation", 1e-10),
                              boundary_tol=boundary_tol)
                floors = [s.vertex_values() for s in nested_spectra(graph, levels, Q, "floor", **kwargs)]
                ceils = [s.vertex_values() for s in nested_spectra(graph, levels, Q, "ceil", **kwargs)]
            else:
                floors, ceils = [], []
                for J in levels:
                    h = 2.0 ** -J
                    floors.append(equilateral_spectrum(floor_approximation(graph, h), Q,
                                                       sparse_threshold, boundary_tol).vertex_values())
                    ceils.append(equilateral_spectrum(ceil_approximation(graph, h), Q,
                                                      sparse_threshold, boundary_tol).vertex_values())
                    logger.info("Sweep level J=%d done", J)
        except (QGraphError, ValueError) as e:
            raise ControllerError(f"Error running sweep: {e}")

        rows: List[Dict[str, Any]] = []
        for J, floor_values, ceil_values in zip(levels, floors, ceils):
            h = 2.0 ** -J
            dist_floor = distance(graph, floor_approximation(graph, h))
            dist_ceil = distance(graph, ceil_approximation(graph, h))
            count = min(len(floor_values), len(ceil_values))
            for q in range(count):
                row = {
                    "J": J, "h": h, "q": q + 1,
                    "dist_floor": dist_floor, "dist_ceil": dist_ceil,
                    "lambda_floor": float(floor_values[q]), "lambda_ceil": float(ceil_values[q]),
                    "lambda_ref": "", "err_floor": "", "err_ceil": "",
                    "bracket_inverted": bool(floor_values[q] < ceil_values[q] - 1e-9 * max(1.0, ceil_values[q])),
                }
                if reference is not None and q < len(reference):
                    row["lambda_ref"] = float(reference[q])
                    row["err_floor"] = abs(float(reference[q]) - row["lambda_floor"])
                    row["err_ceil"] = abs(float(reference[q]) - row["lambda_ceil"])
                rows.append(row)
        payload = {"Q": Q, "levels": levels, "nested": nested, "rows": rows}
        return self._deliver(format_type, rows, SWEEP_COLUMNS, payload, output_file, "Sweep")

    def scan(self, graph_file: str, z_min: float, z_max: float, samples: int,
             output_file: Optional[str] = None, format_type: str = "table") -> str:
        """Reciprocal condition number of H(z) on an even grid; pole samples are dropped."""
        if z_min <= 0 or samples < 2:
            raise ControllerError("Scan needs a positive z range and at least 2 samples")
        graph = self._load_graph(graph_file)
        nep = self.config.section("nep")
        values = rcond_scan(graph, np.linspace(z_min, z_max, samples),
                            pole_guard=nep.get("pole_guard", 1e-8),
                            exact_limit=nep.get("exact_rcond_limit", 200))
        rows = [{"z": z, "rcond": value} for z, value in values if value is not None]
        dropped = len(values) - len(rows)
        if dropped:
            logger.info("Dropped %d samples inside pole guards", dropped)
        payload = {"samples": rows, "dropped": dropped}
        if format_type.lower() == "table" and not output_file:
            rows = [dict(row, rcond=f"{row['rcond']:.3e}") for row in rows]
            minimum = min((r for r in values if r[1] is not None), key=lambda r: r[1], default=None)
            note = "" if minimum is None else f"\n\nSmallest rcond {minimum[1]:.3e} at z={minimum[0]:.10g}"
            return self._format_as_table(rows, SCAN_COLUMNS) + note
        return self._deliver(format_type, rows, SCAN_COLUMNS, payload, output_file, "Scan")
