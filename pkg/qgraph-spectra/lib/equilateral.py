"""
Equilateral floor/ceil approximations and their quantum-graph spectra.

An equilateral graph with edge length h has the vertex eigenvalues
lambda = (theta / h)^2 with cos(theta) = 1 - mu, where mu runs over the
normalized Laplacian spectrum and theta over the branches of arccos. Floor
and ceil approximations round every edge length down or up to a multiple of
h; their spectra bracket the spectrum of the original graph and average to
the Newton initial guesses.
"""

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import BracketInverted, MuOutOfRange, StepTooLarge, TopologyMismatch
from .graph import ExtendedGraph, MetricGraph, assign_lengths, extend, gcd_representation
from .laplacian import (
    SPARSE_THRESHOLD,
    eigs_dense,
    gap_shift,
    nested_eigs,
    normalized_laplacian,
    smallest_eigenpairs,
)

logger = logging.getLogger(__name__)

FLOOR = "floor"
CEIL = "ceil"
EXACT = "exact"

VERTEX = "vertex"
EXCLUDED_BOUNDARY = "excluded_boundary"

BOUNDARY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class EquilateralApproximation:
    """
    An equilateral extended graph standing in for a metric graph.

    Attributes:
        extended: The subdivided graph; every sub-edge has length h
        h: Step size
        counts: Sub-edge count N_e per original edge
        cleaned_lengths: h * N_e, the edge lengths after cleaning
        mode: floor, ceil or exact
    """
    extended: ExtendedGraph
    h: float
    counts: np.ndarray
    cleaned_lengths: np.ndarray
    mode: str


@dataclass(frozen=True)
class MappedEigenvalue:
    value: float
    mu: float
    branch: int
    flag: str

    @property
    def is_vertex(self) -> bool:
        return self.flag == VERTEX


@dataclass(frozen=True)
class MappedSpectrum:
    """Ascending quantum eigenvalues with the Laplacian eigenvalue each came from."""
    entries: Tuple[MappedEigenvalue, ...]

    def __len__(self) -> int:
        return len(self.entries)

    def vertex_values(self) -> np.ndarray:
        return np.array([entry.value for entry in self.entries if entry.is_vertex])

    def excluded(self) -> List[MappedEigenvalue]:
        return [entry for entry in self.entries if not entry.is_vertex]


@dataclass(frozen=True)
class GuessBracket:
    """
    Newton initial guesses from the floor and ceil spectra.

    Attributes:
        init: Midpoints 0.5 * (floor_q + ceil_q)
        floor: Floor-approximation eigenvalues
        ceil: Ceil-approximation eigenvalues
        inverted: True where floor_q < ceil_q beyond rounding
    """
    init: np.ndarray
    floor: np.ndarray
    ceil: np.ndarray
    inverted: np.ndarray

    def __len__(self) -> int:
        return int(self.init.shape[0])

    @property
    def lower(self) -> np.ndarray:
        return np.minimum(self.floor, self.ceil)

    @property
    def upper(self) -> np.ndarray:
        return np.maximum(self.floor, self.ceil)


def _grid_ratios(lengths: np.ndarray, h: float) -> np.ndarray:
    ratios = lengths / h
    nearest = np.rint(ratios)
    on_grid = np.abs(ratios - nearest) <= 1e-9 * np.maximum(1.0, ratios)
    return np.where(on_grid, nearest, ratios)


def _approximation(g: MetricGraph, h: float, counts: np.ndarray, mode: str) -> EquilateralApproximation:
    cleaned = counts * h
    extended = extend(assign_lengths(g.graph, cleaned), counts)
    return EquilateralApproximation(extended=extended, h=float(h), counts=counts,
                                    cleaned_lengths=cleaned, mode=mode)


def floor_approximation(g: MetricGraph, h: float) -> EquilateralApproximation:
    """
    Equilateral approximation with N_e = floor(l_e / h).

    Raises:
        StepTooLarge: If h exceeds the shortest edge, leaving some N_e = 0
    """
    if h <= 0:
        raise ValueError(f"Step size must be positive, got {h}")
    counts = np.floor(_grid_ratios(g.lengths, h)).astype(np.int64)
    short = np.flatnonzero(counts < 1)
    if short.size:
        e = int(short[0])
        raise StepTooLarge(f"h={h} exceeds the length {g.lengths[e]!r} of edge {e}")
    return _approximation(g, h, counts, FLOOR)


def ceil_approximation(g: MetricGraph, h: float) -> EquilateralApproximation:
    """Equilateral approximation with N_e = ceil(l_e / h)."""
    if h <= 0:
        raise ValueError(f"Step size must be positive, got {h}")
    counts = np.ceil(_grid_ratios(g.lengths, h)).astype(np.int64)
    return _approximation(g, h, counts, CEIL)


def exact_representation(g: MetricGraph, decimal_digits: int) -> EquilateralApproximation:
    """The gcd representation of grid-exact lengths, as an approximation at distance 0."""
    extended = gcd_representation(g, decimal_digits)
    return EquilateralApproximation(extended=extended, h=extended.step,
                                    counts=extended.counts, cleaned_lengths=g.lengths.copy(),
                                    mode=EXACT)


def approximation_sequence(g: MetricGraph, levels: Iterable[int],
                           mode: str = FLOOR) -> List[EquilateralApproximation]:
    """Approximations at h = 2^-J for each J in `levels`."""
    build = {FLOOR: floor_approximation, CEIL: ceil_approximation}.get(mode)
    if build is None:
        raise ValueError(f"Unknown approximation mode '{mode}'")
    return [build(g, 2.0 ** -J) for J in levels]


def distance(g: MetricGraph, a: EquilateralApproximation) -> float:
    """
    Euclidean distance between the edge lengths of g and of the approximation.

    Raises:
        TopologyMismatch: If the approximation was not built from g's topology
    """
    chains = a.extended.chains
    if len(chains) != g.m or a.extended.n_original != g.n:
        raise TopologyMismatch("Approximation has a different number of edges or vertices")
    endpoints = np.array([[chain[0], chain[-1]] for chain in chains], dtype=np.int64)
    if not np.array_equal(endpoints, g.edges):
        raise TopologyMismatch("Approximation edges do not match the graph's edges")
    return float(np.linalg.norm(g.lengths - a.cleaned_lengths))


def mu_to_lambda(mu: float, ell: float, k: int, boundary_tol: float = BOUNDARY_TOL) -> MappedEigenvalue:
    """
    Map a Laplacian eigenvalue mu to the quantum eigenvalue on branch k.

    Even k gives ((arccos(1 - mu) + k pi) / ell)^2, odd k gives
    ((arccos(1 - mu) - (k + 1) pi) / ell)^2. Branch k covers
    [(k pi / ell)^2, ((k + 1) pi / ell)^2]. Values coming from mu = 0 or 2
    with lambda > 0 are flagged excluded_boundary.

    Raises:
        MuOutOfRange: If mu lies outside [0, 2] beyond boundary_tol
    """
    if not (-boundary_tol <= mu <= 2.0 + boundary_tol):
        raise MuOutOfRange(f"mu={mu!r} is outside [0, 2]")
    mu = min(max(mu, 0.0), 2.0)
    if mu <= boundary_tol:
        theta = 0.0
    elif mu >= 2.0 - boundary_tol:
        theta = math.pi
    else:
        # arccos(1 - mu) without the cancellation near mu = 0
        theta = 2.0 * math.asin(math.sqrt(mu / 2.0))
    boundary = theta in (0.0, math.pi)

    if k % 2 == 0:
        root = theta + k * math.pi
    else:
        root = theta - (k + 1) * math.pi
    value = (root / ell) ** 2
    flag = EXCLUDED_BOUNDARY if boundary and value > 0.0 else VERTEX
    return MappedEigenvalue(value=value, mu=float(mu), branch=k, flag=flag)


def map_spectrum(mus: Sequence[float], h: float, Q: int, max_branch: Optional[int] = None,
                 boundary_tol: float = BOUNDARY_TOL) -> MappedSpectrum:
    """
    Map Laplacian eigenvalues to the Q smallest vertex eigenvalues.

    Branches are added until Q vertex values exist; since every value on
    branch k + 1 lies above every value on branch k, the first Q sorted
    values are then final. Excluded boundary values below the Q-th vertex
    value are kept as metadata.
    """
    mus = [float(mu) for mu in mus]
    entries: List[MappedEigenvalue] = []
    n_vertex = 0
    k = 0
    while True:
        branch = [mu_to_lambda(mu, h, k, boundary_tol) for mu in mus]
        added = sum(entry.is_vertex for entry in branch)
        entries.extend(branch)
        n_vertex += added
        if n_vertex >= Q or (max_branch is not None and k >= max_branch) or (k >= 1 and added == 0):
            break
        k += 1

    entries.sort(key=lambda entry: (entry.value, entry.mu, entry.branch))
    vertex = [entry for entry in entries if entry.is_vertex][:Q]
    if not vertex:
        return MappedSpectrum(entries=())
    cutoff = vertex[-1].value
    kept = []
    remaining = len(vertex)
    for entry in entries:
        if entry.is_vertex:
            if remaining == 0:
                continue
            remaining -= 1
            kept.append(entry)
        elif entry.value <= cutoff:
            kept.append(entry)
    return MappedSpectrum(entries=tuple(kept))


def equilateral_spectrum(a: EquilateralApproximation, Q: int,
                         sparse_threshold: int = SPARSE_THRESHOLD,
                         boundary_tol: float = BOUNDARY_TOL) -> MappedSpectrum:
    """
    The Q smallest vertex eigenvalues of an equilateral approximation.

    The smallest Laplacian eigenvalues on the principal branch suffice unless
    the extended graph is too small to hold Q of them, in which case the full
    Laplacian spectrum is mapped over as many branches as needed.
    """
    extended = a.extended
    M = normalized_laplacian(extended.metric.graph)
    order = M.shape[0]
    count = min(order, Q)
    pairs = smallest_eigenpairs(M, count, sigma=gap_shift(extended), sparse_threshold=sparse_threshold)
    spectrum = map_spectrum(pairs.values, a.h, Q, max_branch=0, boundary_tol=boundary_tol)
    if len(spectrum.vertex_values()) < Q:
        all_mus = pairs.values if count == order else eigs_dense(M, order).values
        spectrum = map_spectrum(all_mus, a.h, Q, boundary_tol=boundary_tol)
    logger.debug("%s spectrum at h=%g: order %d, %d vertex eigenvalues",
                 a.mode, a.h, order, len(spectrum.vertex_values()))
    return spectrum


def reference_spectrum(g: MetricGraph, decimal_digits: int, Q: int,
                       sparse_threshold: int = SPARSE_THRESHOLD,
                       boundary_tol: float = BOUNDARY_TOL) -> MappedSpectrum:
    """Spectrum of g through its exact gcd representation."""
    return equilateral_spectrum(exact_representation(g, decimal_digits), Q,
                                sparse_threshold=sparse_threshold, boundary_tol=boundary_tol)


def initial_guesses(g: MetricGraph, h: float, Q: int,
                    sparse_threshold: int = SPARSE_THRESHOLD) -> GuessBracket:
    """
    Midpoints of the floor and ceil spectra at step h, paired by sorted index.

    Inverted brackets (floor below ceil) are reported with a BracketInverted
    warning and in the returned flags; they do not stop the computation.

    Raises:
        StepTooLarge: If h exceeds the shortest edge
    """
    upper = equilateral_spectrum(floor_approximation(g, h), Q, sparse_threshold).vertex_values()
    lower = equilateral_spectrum(ceil_approximation(g, h), Q, sparse_threshold).vertex_values()
    count = min(upper.shape[0], lower.shape[0])
    upper, lower = upper[:count], lower[:count]
    inverted = upper < lower - 1e-9 * np.maximum(1.0, np.abs(lower))
    if np.any(inverted):
        indices = ", ".join(str(q + 1) for q in np.flatnonzero(inverted))
        warnings.warn(BracketInverted(f"Floor estimate below ceil estimate at h={h} for q = {indices}"))
        logger.warning("Inverted bracket at h=%g for q = %s", h, indices)
    return GuessBracket(init=0.5 * (upper + lower), floor=upper, ceil=lower, inverted=inverted)


def nested_spectra(g: MetricGraph, levels: Iterable[int], Q: int, mode: str = FLOOR,
                   oversample: int = 2, tol: float = 1e-10, maxit: int = 500,
                   sparse_threshold: int = SPARSE_THRESHOLD, pivot_tol: float = 1e-14,
                   shift_perturbation: float = 1e-10,
                   boundary_tol: float = BOUNDARY_TOL) -> List[MappedSpectrum]:
    """Spectra of the approximation sequence h = 2^-J via nested inverse iteration."""
    approximations = approximation_sequence(g, levels, mode)
    pairs = nested_eigs([a.extended for a in approximations], Q, oversample=oversample,
                        tol=tol, maxit=maxit, sparse_threshold=sparse_threshold,
                        pivot_tol=pivot_tol, shift_perturbation=shift_perturbation)
    spectra = []
    for approximation, level in zip(approximations, pairs):
        spectra.append(map_spectrum(level.values, approximation.h, Q, max_branch=0,
                                     boundary_tol=boundary_tol))
        logger.info("Nested %s level h=%g solved (%d vertices)",
                    mode, approximation.h, approximation.extended.metric.n)
    return spectra
