"""
Graph Laplacian matrices and symmetric eigensolvers.

The normalized Laplacian L_norm = I - D^-1/2 A D^-1/2 is the working matrix
everywhere; the harmonic Laplacian D^-1 (D - A) shares its eigenvalues and is
recovered through the D^1/2 similarity. Matrices are scipy CSR; small
problems are solved densely, large ones by shift-invert Lanczos or by the
nested inverse iteration driver.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceFailure, MaxIterations, SingularShift, TopologyMismatch
from .graph import CombinatorialGraph, ExtendedGraph

logger = logging.getLogger(__name__)

Matrix = Union[np.ndarray, sp.spmatrix]

SPARSE_THRESHOLD = 500
# a residual that has not dropped below 0.9 of its best for 10 steps has stalled
STALL_FACTOR = 0.9
STALL_STEPS = 10


@dataclass(frozen=True)
class EigenPairs:
    """Ascending eigenvalues with orthonormal eigenvectors in the columns."""
    values: np.ndarray
    vectors: np.ndarray

    def __len__(self) -> int:
        return int(self.values.shape[0])

    def take(self, count: int) -> 'EigenPairs':
        return EigenPairs(values=self.values[:count], vectors=self.vectors[:, :count])


@dataclass(frozen=True)
class HarmonicLaplacian:
    """
    The harmonic Laplacian D^-1 L held through its normalized similar matrix.

    Attributes:
        normalized: The normalized Laplacian L_norm
        sqrt_degrees: Diagonal of D^1/2
    """
    normalized: sp.csr_matrix
    sqrt_degrees: np.ndarray

    def matrix(self) -> sp.csr_matrix:
        """Explicit D^-1 L = D^-1/2 L_norm D^1/2."""
        inv = sp.diags(1.0 / self.sqrt_degrees)
        return (inv @ self.normalized @ sp.diags(self.sqrt_degrees)).tocsr()

    def eigenpairs(self, Q: int, sparse_threshold: int = SPARSE_THRESHOLD) -> EigenPairs:
        """Eigenpairs (mu, D^-1/2 x) of D^-1 L, vectors scaled to unit 2-norm."""
        pairs = smallest_eigenpairs(self.normalized, Q, sparse_threshold=sparse_threshold)
        vectors = pairs.vectors / self.sqrt_degrees[:, None]
        vectors = vectors / np.linalg.norm(vectors, axis=0)
        return EigenPairs(values=pairs.values, vectors=vectors)


def normalized_laplacian(graph: CombinatorialGraph) -> sp.csr_matrix:
    """
    Normalized graph Laplacian I - D^-1/2 A D^-1/2.

    The diagonal is 1 and edge entries are -1/sqrt(deg(v_i) deg(v_j)).
    """
    inv_sqrt = sp.diags(1.0 / np.sqrt(graph.degrees.astype(float)))
    off_diagonal = inv_sqrt @ graph.adjacency_matrix() @ inv_sqrt
    return (sp.identity(graph.n, format='csr') - off_diagonal).tocsr()


def harmonic_laplacian(graph: CombinatorialGraph) -> HarmonicLaplacian:
    return HarmonicLaplacian(
        normalized=normalized_laplacian(graph),
        sqrt_degrees=np.sqrt(graph.degrees.astype(float)),
    )


def _check_count(order: int, Q: int) -> None:
    if Q < 1 or Q > order:
        raise ValueError(f"Requested {Q} eigenpairs of a matrix of order {order}")


def eigs_dense(M: Matrix, Q: int) -> EigenPairs:
    """Q smallest eigenpairs by a dense symmetric eigensolver."""
    dense = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)
    _check_count(dense.shape[0], Q)
    try:
        values, vectors = la.eigh(dense, subset_by_index=[0, Q - 1])
    except la.LinAlgError as e:
        raise ConvergenceFailure(f"Dense eigensolver failed: {e}")
    return EigenPairs(values=values, vectors=vectors)


def eigs_sparse(M: Matrix, Q: int, sigma: float = -1e-6) -> EigenPairs:
    """
    Q eigenpairs nearest sigma by shift-invert Lanczos.

    With sigma slightly below zero these are the Q smallest eigenpairs of a
    positive semidefinite M. The start vector is fixed so results are
    reproducible.
    """
    order = M.shape[0]
    _check_count(order, Q)
    if Q >= order - 1:
        return eigs_dense(M, Q)
    v0 = np.random.default_rng(0).standard_normal(order)
    try:
        values, vectors = spla.eigsh(sp.csc_matrix(M), k=Q, sigma=sigma, which='LM', v0=v0)
    except spla.ArpackNoConvergence as e:
        raise ConvergenceFailure(f"Lanczos did not converge: {e}")
    order_idx = np.argsort(values)
    return EigenPairs(values=values[order_idx], vectors=vectors[:, order_idx])


def smallest_eigenpairs(M: Matrix, Q: int, sigma: Optional[float] = None,
                        sparse_threshold: int = SPARSE_THRESHOLD) -> EigenPairs:
    """Dispatch to the dense solver for small problems, Lanczos otherwise."""
    order = M.shape[0]
    if order <= sparse_threshold or Q >= order - 1:
        logger.debug("Dense eigensolver: order %d, Q=%d", order, Q)
        return eigs_dense(M, Q)
    logger.debug("Shift-invert Lanczos: order %d, Q=%d, sigma=%g", order, Q, sigma)
    return eigs_sparse(M, Q, sigma=-1e-6 if sigma is None else sigma)


def gap_shift(extended: ExtendedGraph) -> float:
    """
    A shift safely below the smallest nonzero eigenvalue of an equilateral
    extended graph, from the lower bound (pi / total length)^2 on its
    quantum spectral gap.
    """
    theta = math.pi * extended.step / extended.metric.total_length
    return -0.05 * theta * theta


def _shifted_solver(M: Matrix, shift: float, pivot_tol: float,
                    shift_perturbation: float) -> Tuple[Callable[[np.ndarray], np.ndarray], float]:
    order = M.shape[0]
    if sp.issparse(M):
        norm = spla.norm(M, 1)
    else:
        norm = np.linalg.norm(M, 1)
    threshold = pivot_tol * max(norm, 1.0)

    for attempt, sigma in enumerate((shift, shift + shift_perturbation)):
        if attempt:
            logger.warning("Shift %r is numerically singular; retrying with %r", shift, sigma)
        if sp.issparse(M):
            shifted = sp.csc_matrix(M - sigma * sp.identity(order, format='csc'))
            try:
                factor = spla.splu(shifted)
            except RuntimeError:
                continue
            if np.min(np.abs(factor.U.diagonal())) >= threshold:
                return factor.solve, sigma
        else:
            shifted = np.asarray(M, dtype=float) - sigma * np.eye(order)
            lu, piv = la.lu_factor(shifted, check_finite=False)
            if np.min(np.abs(np.diag(lu))) >= threshold:
                return (lambda b, lu=lu, piv=piv: la.lu_solve((lu, piv), b)), sigma
    raise SingularShift(f"M - {shift!r} I stays singular after regularization")


def _project_out(x: np.ndarray, basis: Optional[np.ndarray]) -> np.ndarray:
    if basis is None or basis.shape[1] == 0:
        return x
    return x - basis @ (basis.T @ x)


def inverse_iteration(M: Matrix, shift: float, start: Optional[np.ndarray] = None,
                      tol: float = 1e-10, maxit: int = 500,
                      deflate: Optional[np.ndarray] = None,
                      pivot_tol: float = 1e-14,
                      shift_perturbation: float = 1e-10) -> Tuple[float, np.ndarray]:
    """
    Eigenpair of M nearest `shift`, orthogonal to the columns of `deflate`.

    Args:
        M: Symmetric matrix, dense or sparse
        shift: Target shift
        start: Start vector; a fixed pseudo-random vector when None
        tol: Relative residual tolerance, ||Mx - mu x|| <= tol * ||M||_1
        maxit: Iteration cap
        deflate: Orthonormal vectors to project out every iteration

    Returns:
        Tuple of (eigenvalue, unit eigenvector)

    Raises:
        MaxIterations: If the residual neither reaches tol nor levels off
            below sqrt(eps) * ||M||_1 within maxit steps
        SingularShift: If M - shift I cannot be factorized
    """
    solve, sigma = _shifted_solver(M, shift, pivot_tol, shift_perturbation)
    order = M.shape[0]
    if start is None:
        start = np.random.default_rng(0).standard_normal(order)
    x = _project_out(np.asarray(start, dtype=float), deflate)
    norm = np.linalg.norm(x)
    if norm == 0.0:
        x = _project_out(np.random.default_rng(0).standard_normal(order), deflate)
        norm = np.linalg.norm(x)
    x = x / norm

    scale = float(spla.norm(M, 1)) if sp.issparse(M) else float(np.linalg.norm(M, 1))
    threshold = tol * scale
    stall_floor = math.sqrt(np.finfo(float).eps) * scale
    residual = np.inf
    best = np.inf
    stalled = 0
    for iteration in range(1, maxit + 1):
        y = _project_out(solve(x), deflate)
        x = y / np.linalg.norm(y)
        Mx = M @ x
        mu = float(x @ Mx)
        residual = float(np.linalg.norm(Mx - mu * x))
        if residual <= threshold:
            logger.debug("Inverse iteration at shift %.6g: mu=%.12g after %d steps",
                         sigma, mu, iteration)
            return mu, x
        if residual < STALL_FACTOR * best:
            best = residual
            stalled = 0
        else:
            stalled += 1
        if stalled >= STALL_STEPS and best <= stall_floor:
            logger.debug("Inverse iteration at shift %.6g: residual stalled at %.3e (mu=%.12g)",
                         sigma, residual, mu)
            return mu, x
    raise MaxIterations(
        f"Inverse iteration at shift {sigma!r} stopped after {maxit} steps, residual {residual:.3e}"
    )


def prolongate(coarse: ExtendedGraph, fine: ExtendedGraph, x: np.ndarray) -> np.ndarray:
    """
    Transfer a normalized-Laplacian eigenvector to a finer extended graph.

    Vertex values D^-1/2 x are copied on original vertices and linearly
    interpolated along each original edge; the result is mapped back through
    D^1/2 and normalized.
    """
    if len(coarse.chains) != len(fine.chains) or coarse.n_original != fine.n_original:
        raise TopologyMismatch("Levels do not subdivide the same original graph")
    values = x / np.sqrt(coarse.metric.graph.degrees)
    refined = np.zeros(fine.metric.n)
    n = fine.n_original
    refined[:n] = values[:n]
    for coarse_chain, fine_chain in zip(coarse.chains, fine.chains):
        if fine_chain.shape[0] <= 2:
            continue
        t_coarse = np.linspace(0.0, 1.0, coarse_chain.shape[0])
        t_fine = np.linspace(0.0, 1.0, fine_chain.shape[0])
        refined[fine_chain[1:-1]] = np.interp(t_fine[1:-1], t_coarse, values[coarse_chain])
    refined *= np.sqrt(fine.metric.graph.degrees)
    return refined / np.linalg.norm(refined)


def nested_eigs(levels: Sequence[ExtendedGraph], Q: int, oversample: int = 2,
                tol: float = 1e-10, maxit: int = 500,
                sparse_threshold: int = SPARSE_THRESHOLD,
                pivot_tol: float = 1e-14,
                shift_perturbation: float = 1e-10) -> List[EigenPairs]:
    """
    Q smallest normalized-Laplacian eigenpairs on a refinement hierarchy.

    The first level is solved directly. Every later level runs shifted
    inverse iteration per eigenvalue index, with shift 1 - cos(sqrt(lambda) h)
    from the previous level's quantum eigenvalue lambda and the new step h,
    and the prolongated previous eigenvector as start. Indices are processed
    in ascending order and accepted vectors are deflated.

    Returns:
        List of EigenPairs, one per level, each holding Q pairs
    """
    if not levels:
        return []
    first = levels[0]
    count = min(Q + oversample, first.metric.n)
    previous = smallest_eigenpairs(normalized_laplacian(first.metric.graph), count,
                                   sigma=gap_shift(first), sparse_threshold=sparse_threshold)
    results = [previous.take(Q)]
    logger.debug("Nested level 0: h=%g, order %d", first.step, first.metric.n)

    for coarse, fine in zip(levels[:-1], levels[1:]):
        M = normalized_laplacian(fine.metric.graph)
        h_coarse, h_fine = coarse.step, fine.step
        sqrt_degrees = np.sqrt(fine.metric.graph.degrees.astype(float))
        values: List[float] = []
        vectors: List[np.ndarray] = []
        for mu_prev, x_prev in zip(previous.values, previous.vectors.T):
            mu_prev = min(max(float(mu_prev), 0.0), 2.0)
            if mu_prev < 1e-9 and not values:
                values.append(0.0)
                vectors.append(sqrt_degrees / np.linalg.norm(sqrt_degrees))
                continue
            theta = 2.0 * math.asin(math.sqrt(mu_prev / 2.0))
            shift = 2.0 * math.sin(theta * h_fine / (2.0 * h_coarse)) ** 2
            deflate = np.column_stack(vectors) if vectors else None
            mu, x = inverse_iteration(
                M, shift, start=prolongate(coarse, fine, x_prev), tol=tol, maxit=maxit,
                deflate=deflate, pivot_tol=pivot_tol, shift_perturbation=shift_perturbation,
            )
            values.append(mu)
            vectors.append(x)
        order_idx = np.argsort(values, kind='stable')
        previous = EigenPairs(values=np.asarray(values)[order_idx],
                              vectors=np.column_stack(vectors)[:, order_idx])
        results.append(previous.take(Q))
        logger.debug("Nested level: h=%g, order %d, mu range [%.3g, %.3g]",
                     h_fine, fine.metric.n, previous.values[0], previous.values[-1])
    return results
