"""
Eigenfunction controller: reconstruct, check and sample eigenfunctions.
"""

from typing import Any, Dict, List, Optional

from lib.eigenfunctions import eigenfunctions_for, residuals, sample
from lib.errors import QGraphError
from lib.spectrum import compute_spectrum

from . import BaseController, ControllerError

SAMPLE_COLUMNS = ["mode", "edge_index", "x", "value"]
RESIDUAL_COLUMNS = ["mode", "lambda", "continuity_gap", "kirchhoff_max", "ode_residual"]


class EigenfunctionController(BaseController):
    """Controller for eigenfunction operations."""

    def eigenfunction(self, graph_file: str, index: Optional[int] = None, value: Optional[float] = None,
                      h: Optional[float] = None, resolution: int = 50,
                      output_file: Optional[str] = None, format_type: str = "table") -> str:
        """
        Eigenfunctions of one eigenvalue, given directly or by its 1-based index.

        An index requires h: the spectrum up to that index is computed first.
        Every eigenfunction of the eigenspace is sampled; the terminal table
        shows the residual check per mode.
        """
        if (index is None) == (value is None):
            raise ControllerError("Give exactly one of --index and --lambda")
        graph = self._load_graph(graph_file)
        nullspace_rtol = self.config.get_value("nep", "nullspace_rtol", 1e-8)

        try:
            if index is not None:
                if h is None:
                    raise ControllerError("--index needs --h to compute the spectrum")
                spectrum = compute_spectrum(graph, index, h, **self._solver_options())
                if len(spectrum.eigenvalues) < index:
                    raise ControllerError(f"Only {len(spectrum.eigenvalues)} eigenvalues converged; "
                                          f"eigenvalue {index} is unavailable")
                value = spectrum.eigenvalues[index - 1]
            functions = eigenfunctions_for(graph, value, nullspace_rtol)
        except (QGraphError, ValueError) as e:
            raise ControllerError(f"Error computing eigenfunctions: {e}")

        checks: List[Dict[str, Any]] = []
        samples: List[Dict[str, Any]] = []
        for mode, function in enumerate(functions, start=1):
            residual = residuals(function, graph)
            checks.append({"mode": mode, "lambda": function.value,
                           "continuity_gap": residual.continuity_gap,
                           "kirchhoff_max": residual.kirchhoff_max,
                           "ode_residual": residual.ode_residual})
            samples.extend({"mode": mode, "edge_index": edge, "x": x, "value": y}
                           for edge, x, y in sample(function, resolution))

        payload = {"lambda": value, "multiplicity": len(functions), "residuals": checks,
                   "vertex_values": [function.vertex_values.tolist() for function in functions],
                   "samples": samples}
        if output_file:
            return self._deliver(format_type, samples, SAMPLE_COLUMNS, payload, output_file, "Eigenfunctions")
        if format_type.lower() == "table":
            header = f"lambda = {value:.12g}, multiplicity {len(functions)}\n\n"
            return header + self._format_as_table(checks, RESIDUAL_COLUMNS)
        return self._render(format_type, samples, SAMPLE_COLUMNS, payload)
