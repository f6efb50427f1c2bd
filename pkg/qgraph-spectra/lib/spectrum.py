"""
End-to-end spectrum computation.

Initial guesses come from the floor/ceil equilateral approximations at step h;
each guess is refined by the Newton-trace iteration on H(z), kept inside its
floor/ceil bracket where det H changes sign. Converged roots are deduplicated
and their multiplicity read off the null space of H.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .equilateral import initial_guesses
from .errors import NotSingular
from .graph import MetricGraph
from .laplacian import SPARSE_THRESHOLD
from .nep import (
    CONVERGED,
    POLE_GUARD,
    is_admissible,
    nonvertex_candidates,
    nullvector,
    search_window,
    solve_newton_trace,
)

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["index", "lambda", "init", "lower", "upper", "iterations",
               "rcond", "status", "multiplicity", "flags"]

GROUND_STATE = "ground_state"
BRACKET_INVERTED = "bracket_inverted"
BASIN_ESCAPE = "basin_escape"
NONVERTEX_GUESS = "nonvertex_guess"
UNCOVERED_BRACKET = "uncovered_bracket"

NONVERTEX_CANDIDATE = "nonvertex_candidate"
UNRESOLVED = "unresolved"


@dataclass
class SpectrumEntry:
    """
    One eigenvalue (or one failed guess) with its provenance.

    Attributes:
        value: Converged eigenvalue, or the last iterate for a failed guess
        init: Initial guess 0.5 * (floor + ceil)
        lower: Smaller of the floor/ceil estimates
        upper: Larger of the floor/ceil estimates
        iterations: Newton-trace iterations used
        rcond: Reciprocal condition number of H at value (None for lambda = 0)
        status: converged, max_iterations, singularity_encountered,
            nonvertex_candidate or unresolved
        multiplicity: Dimension of the null space of H(value)
        flags: Quality flags
        index: 1-based position of the first copy of value in the spectrum
            counted with multiplicity (None for failures)
    """
    value: float
    init: float
    lower: float
    upper: float
    iterations: int
    rcond: Optional[float]
    status: str
    multiplicity: int = 1
    flags: List[str] = field(default_factory=list)
    index: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "index": self.index,
            "lambda": self.value,
            "init": self.init,
            "lower": self.lower,
            "upper": self.upper,
            "iterations": self.iterations,
            "rcond": self.rcond,
            "status": self.status,
            "multiplicity": self.multiplicity,
            "flags": list(self.flags),
        }

    def to_row(self) -> Dict[str, Any]:
        row = self.to_dict()
        row["index"] = "" if self.index is None else self.index
        row["rcond"] = "" if self.rcond is None else self.rcond
        row["flags"] = ";".join(self.flags)
        return row


@dataclass
class SpectrumResult:
    """
    Sorted eigenvalues of a metric graph plus per-guess metadata.

    Attributes:
        Q: Number of eigenvalues requested
        h: Step size of the approximations that produced the guesses
        entries: Converged, distinct eigenvalues in ascending order
        missed: Guesses that did not converge, and brackets left without a root
        nonvertex_candidates: Values (k pi / l_e)^2 inside the spectral window
    """
    Q: int
    h: float
    entries: List[SpectrumEntry] = field(default_factory=list)
    missed: List[SpectrumEntry] = field(default_factory=list)
    nonvertex_candidates: List[float] = field(default_factory=list)

    @property
    def eigenvalues(self) -> List[float]:
        """The first Q eigenvalues, repeated according to multiplicity."""
        values: List[float] = []
        for entry in self.entries:
            values.extend([entry.value] * entry.multiplicity)
        return values[:self.Q]

    @property
    def complete(self) -> bool:
        """
        Q eigenvalues were found and no bracket below the largest of them
        was left without a root.
        """
        values = self.eigenvalues
        if len(values) < self.Q:
            return False
        return not any(UNCOVERED_BRACKET in entry.flags and entry.lower <= values[-1]
                       for entry in self.missed)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "Q": self.Q,
            "h": self.h,
            "eigenvalues": self.eigenvalues,
            "entries": [entry.to_dict() for entry in self.entries],
            "missed": [entry.to_dict() for entry in self.missed],
            "nonvertex_candidates": list(self.nonvertex_candidates),
        }

    def to_rows(self) -> List[Dict[str, Any]]:
        """Flat rows in CSV_COLUMNS order, converged entries first."""
        return [entry.to_row() for entry in self.entries + self.missed]


def _find_duplicate(entries: List[SpectrumEntry], value: float, rtol: float) -> Optional[SpectrumEntry]:
    for entry in entries:
        if abs(entry.value - value) <= rtol * max(abs(entry.value), abs(value)):
            return entry
    return None


def _multiplicity(g: MetricGraph, value: float, nullspace_rtol: float, pole_guard: float) -> int:
    try:
        return int(nullvector(g, value, nullspace_rtol, pole_guard).shape[1])
    except NotSingular:
        return 1


def _solve_guesses(g: MetricGraph, h: float, requested: int, options: Dict[str, Any],
                   sparse_threshold: int) -> Tuple[List[SpectrumEntry], List[SpectrumEntry], float, int]:
    bracket = initial_guesses(g, h, requested, sparse_threshold=sparse_threshold)
    pole_guard = options["pole_guard"]
    accepted: List[SpectrumEntry] = []
    missed: List[SpectrumEntry] = []
    unsettled: List[Tuple[int, SpectrumEntry]] = []

    for q in range(len(bracket)):
        guess = float(bracket.init[q])
        lower, upper = float(bracket.lower[q]), float(bracket.upper[q])
        flags = [BRACKET_INVERTED] if bracket.inverted[q] else []

        if guess <= 0.0:
            if not _find_duplicate(accepted, 0.0, 0.0):
                accepted.append(SpectrumEntry(value=0.0, init=guess, lower=lower, upper=upper,
                                              iterations=0, rcond=None, status=CONVERGED,
                                              flags=flags + [GROUND_STATE]))
            continue

        if not is_admissible(g, guess, pole_guard):
            missed.append(SpectrumEntry(value=guess, init=guess, lower=lower, upper=upper,
                                        iterations=0, rcond=None, status=NONVERTEX_CANDIDATE,
                                        flags=flags + [NONVERTEX_GUESS]))
            logger.info("q=%d: guess %.10g lies on a non-vertex candidate", q + 1, guess)
            continue

        result = solve_newton_trace(
            g, guess,
            rcond_tol=options["rcond_tol"], maxit=options["maxit"], pole_guard=pole_guard,
            max_halvings=options["max_halvings"], exact_rcond_limit=options["exact_rcond_limit"],
            bracket=(lower, upper),
        )
        entry = SpectrumEntry(value=result.value, init=guess, lower=lower, upper=upper,
                              iterations=result.iterations, rcond=result.rcond,
                              status=result.status, flags=flags)
        if not result.converged:
            missed.append(entry)
            unsettled.append((q, entry))
            logger.info("q=%d: %s after %d iterations from %.10g",
                        q + 1, result.status, result.iterations, guess)
            continue

        window_low, window_high = search_window(lower, upper)
        if not window_low <= result.value <= window_high:
            entry.flags.append(BASIN_ESCAPE)
            unsettled.append((q, entry))
            logger.warning("q=%d: converged to %.10g outside the bracket [%.10g, %.10g]",
                           q + 1, result.value, lower, upper)

        if _find_duplicate(accepted, result.value, options["dedup_rtol"]):
            logger.debug("q=%d: %.12g already found", q + 1, result.value)
            continue
        entry.multiplicity = _multiplicity(g, result.value, options["nullspace_rtol"], pole_guard)
        accepted.append(entry)
        logger.info("q=%d: lambda=%.12g in %d iterations (rcond %.2e, multiplicity %d)",
                    q + 1, result.value, result.iterations, result.rcond, entry.multiplicity)

    for q, entry in unsettled:
        window_low, window_high = search_window(entry.lower, entry.upper)
        if any(window_low <= found.value <= window_high for found in accepted):
            continue
        logger.warning("q=%d: no eigenvalue found in [%.10g, %.10g]", q + 1, entry.lower, entry.upper)
        if entry.status == CONVERGED:
            missed.append(replace(entry, value=entry.init, status=UNRESOLVED, multiplicity=1,
                                  flags=entry.flags + [UNCOVERED_BRACKET], index=None))
        else:
            entry.flags.append(UNCOVERED_BRACKET)

    window = float(np.max(bracket.upper)) if len(bracket) else 0.0
    return accepted, missed, window, len(bracket)


def compute_spectrum(g: MetricGraph, Q: int, h: float, rcond_tol: float = 1e-10, maxit: int = 1000,
                     pole_guard: float = POLE_GUARD, max_halvings: int = 30, dedup_rtol: float = 1e-8,
                     nullspace_rtol: float = 1e-8, exact_rcond_limit: int = 200,
                     guess_padding: int = 4, max_guess_rounds: int = 4,
                     sparse_threshold: int = SPARSE_THRESHOLD) -> SpectrumResult:
    """
    The Q smallest eigenvalues of g, counted with multiplicity.

    Guesses for Q + guess_padding eigenvalues are refined first, since some
    guesses land on non-vertex values or converge to roots already found.
    If fewer than Q eigenvalues result, the guess count is doubled, up to
    max_guess_rounds rounds. Individual failures are recorded, never raised.

    Each Newton-trace run is confined to a slightly widened floor/ceil
    bracket of its guess. A bracket that ends up holding none of the
    accepted eigenvalues is reported in missed with the uncovered_bracket
    flag, and the result is then incomplete if the bracket lies below the
    largest returned eigenvalue.

    Raises:
        StepTooLarge: If h exceeds the shortest edge
    """
    if Q < 1:
        raise ValueError(f"Q must be at least 1, got {Q}")
    options = {
        "rcond_tol": rcond_tol, "maxit": maxit, "pole_guard": pole_guard,
        "max_halvings": max_halvings, "dedup_rtol": dedup_rtol,
        "nullspace_rtol": nullspace_rtol, "exact_rcond_limit": exact_rcond_limit,
    }
    requested = Q + guess_padding
    for round_number in range(1, max_guess_rounds + 1):
        accepted, missed, window, available = _solve_guesses(g, h, requested, options, sparse_threshold)
        found = sum(entry.multiplicity for entry in accepted)
        if found >= Q or available < requested:
            break
        logger.info("Round %d found %d of %d eigenvalues; widening to %d guesses",
                    round_number, found, Q, 2 * requested)
        requested *= 2

    accepted.sort(key=lambda entry: entry.value)
    entries: List[SpectrumEntry] = []
    counted = 0
    for entry in accepted:
        if counted >= Q:
            break
        entry.index = counted + 1
        entries.append(entry)
        counted += entry.multiplicity
    return SpectrumResult(Q=Q, h=h, entries=entries, missed=missed,
                          nonvertex_candidates=nonvertex_candidates(g, window))
