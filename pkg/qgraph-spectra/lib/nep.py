"""
The nonlinear eigenvalue problem H(z) Phi = 0 and its Newton-trace solver.

For a metric graph with Neumann-Kirchhoff conditions, z > 0 is a vertex
eigenvalue exactly when the vertex matrix

    H_ii = -sum_{e at v_i} cot(sqrt(z) l_e),   H_ij = 1 / sin(sqrt(z) l_e)

is singular. Roots of det H(z) are found with the Newton-trace iteration
z <- z - 1 / trace(H(z)^-1 H'(z)), stopped once the reciprocal condition
number of H falls below a threshold. Given the floor/ceil bracket of a guess,
the iteration is safeguarded by bisection on the sign of det H(z).
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Tuple

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg.lapack import get_lapack_funcs

from .errors import FlatDeterminant, NearSingularEdge, NotSingular, SingularIterate
from .graph import MetricGraph

logger = logging.getLogger(__name__)

POLE_GUARD = 1e-8
DENSE_SOLVE_LIMIT = 500
SOLVE_BLOCK = 256
BRACKET_SLACK = 0.05

CONVERGED = "converged"
MAX_ITERATIONS = "max_iterations"
SINGULARITY_ENCOUNTERED = "singularity_encountered"


@dataclass
class NewtonResult:
    """Outcome of one Newton-trace run."""
    value: float
    iterations: int
    rcond: float
    status: str
    history: List[float] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lambda": self.value,
            "iterations": self.iterations,
            "rcond": self.rcond,
            "status": self.status,
            "history": list(self.history),
        }


def _edge_trig(g: MetricGraph, z: float, pole_guard: float) -> Tuple[np.ndarray, np.ndarray]:
    if not z > 0:
        raise ValueError(f"z must be positive, got {z!r}")
    arguments = math.sqrt(z) * g.lengths
    sines = np.sin(arguments)
    near = np.flatnonzero(np.abs(sines) <= pole_guard)
    if near.size:
        raise NearSingularEdge(int(near[0]), z)
    return sines, np.cos(arguments)


def is_admissible(g: MetricGraph, z: float, pole_guard: float = POLE_GUARD) -> bool:
    """True when z > 0 is finite and clear of every edge's pole guard."""
    if not (math.isfinite(z) and z > 0):
        return False
    return bool(np.min(np.abs(np.sin(math.sqrt(z) * g.lengths))) > pole_guard)


def _assemble(g: MetricGraph, diagonal_terms: np.ndarray, off_diagonal: np.ndarray) -> sp.csr_matrix:
    i, j = g.edges[:, 0], g.edges[:, 1]
    diagonal = np.zeros(g.n)
    np.add.at(diagonal, i, diagonal_terms)
    np.add.at(diagonal, j, diagonal_terms)
    vertices = np.arange(g.n)
    rows = np.concatenate([i, j, vertices])
    cols = np.concatenate([j, i, vertices])
    data = np.concatenate([off_diagonal, off_diagonal, diagonal])
    return sp.csr_matrix((data, (rows, cols)), shape=(g.n, g.n))


def assemble_H(g: MetricGraph, z: float, pole_guard: float = POLE_GUARD) -> sp.csr_matrix:
    """
    The vertex matrix H(z).

    Raises:
        NearSingularEdge: If |sin(sqrt(z) l_e)| <= pole_guard for some edge
    """
    sines, cosines = _edge_trig(g, z, pole_guard)
    return _assemble(g, -cosines / sines, 1.0 / sines)


def assemble_H_prime(g: MetricGraph, z: float, pole_guard: float = POLE_GUARD) -> sp.csr_matrix:
    """Analytic derivative dH/dz, same sparsity as H(z)."""
    sines, cosines = _edge_trig(g, z, pole_guard)
    scale = g.lengths / (2.0 * math.sqrt(z) * sines ** 2)
    return _assemble(g, scale, -scale * cosines)


def rcond(M: Any, exact_limit: int = 200) -> float:
    """
    Reciprocal condition number of a square matrix, 0 when singular.

    The matrix is first scaled by its largest absolute entry. Up to order
    exact_limit the exact 2-norm value sigma_min / sigma_max is returned;
    above it, the LAPACK 1-norm estimate from an LU factorization.
    """
    dense = M.toarray() if sp.issparse(M) else np.array(M, dtype=float)
    scale = np.max(np.abs(dense)) if dense.size else 0.0
    if scale == 0.0 or not np.isfinite(scale):
        return 0.0
    dense = dense / scale

    if dense.shape[0] <= exact_limit:
        singular_values = la.svdvals(dense)
        return float(singular_values[-1] / singular_values[0])

    getrf, gecon = get_lapack_funcs(('getrf', 'gecon'), (dense,))
    lu, _, info = getrf(dense)
    if info > 0:
        return 0.0
    value, info = gecon(lu, np.linalg.norm(dense, 1), norm='1')
    return float(value)


def _trace_dense(H: sp.csr_matrix, H_prime: sp.csr_matrix) -> Tuple[float, float]:
    lu, piv = la.lu_factor(H.toarray(), check_finite=False)
    pivots = np.abs(np.diag(lu))
    if not np.all(np.isfinite(pivots)) or np.min(pivots) == 0.0:
        raise SingularIterate("H(z) is singular to working precision")
    X = la.lu_solve((lu, piv), H_prime.toarray())
    return float(np.trace(X)), float(np.linalg.norm(X))


def _trace_sparse(H: sp.csr_matrix, H_prime: sp.csr_matrix) -> Tuple[float, float]:
    try:
        factor = spla.splu(H.tocsc())
    except RuntimeError as e:
        raise SingularIterate(f"H(z) is singular to working precision: {e}")
    H_prime = H_prime.tocsc()
    trace = 0.0
    frobenius_sq = 0.0
    order = H.shape[0]
    for start in range(0, order, SOLVE_BLOCK):
        stop = min(start + SOLVE_BLOCK, order)
        block = factor.solve(H_prime[:, start:stop].toarray())
        trace += float(np.sum(block[np.arange(start, stop), np.arange(stop - start)]))
        frobenius_sq += float(np.sum(block * block))
    return trace, math.sqrt(frobenius_sq)


def newton_trace_step(g: MetricGraph, z: float, pole_guard: float = POLE_GUARD,
                      dense_limit: int = DENSE_SOLVE_LIMIT) -> float:
    """
    One Newton-trace update z - 1 / trace(H(z)^-1 H'(z)).

    H is factorized once and solved against the columns of H'; H^-1 is
    never formed.

    Raises:
        SingularIterate: If H(z) cannot be factorized
        FlatDeterminant: If the trace vanishes, so no Newton direction exists
    """
    H = assemble_H(g, z, pole_guard)
    H_prime = assemble_H_prime(g, z, pole_guard)
    if g.n <= dense_limit:
        trace, size = _trace_dense(H, H_prime)
    else:
        trace, size = _trace_sparse(H, H_prime)
    if not math.isfinite(trace) or abs(trace) <= g.n * 1e-13 * size:
        raise FlatDeterminant(f"trace(H^-1 H') vanishes at z={z!r}")
    return z - 1.0 / trace


def search_window(lower: float, upper: float, slack: float = BRACKET_SLACK) -> Tuple[float, float]:
    """
    The floor/ceil interval widened on both sides by slack times its width,
    plus a small relative margin so that degenerate brackets keep some room.
    """
    lower, upper = sorted((float(lower), float(upper)))
    margin = slack * (upper - lower) + 1e-8 * max(1.0, upper)
    return lower - margin, upper + margin


def _permutation_sign(perm: np.ndarray) -> int:
    seen = np.zeros(perm.shape[0], dtype=bool)
    transpositions = 0
    for start in range(perm.shape[0]):
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = int(perm[j])
            length += 1
        transpositions += max(length - 1, 0)
    return -1 if transpositions % 2 else 1


def det_sign(g: MetricGraph, z: float, pole_guard: float = POLE_GUARD,
             dense_limit: int = DENSE_SOLVE_LIMIT) -> int:
    """
    Sign of det H(z): 1, -1, or 0 when H(z) is singular to working precision.

    Dense orders use slogdet. Larger ones read the sign off the diagonal of
    U and the two permutations of a sparse LU factorization.

    Raises:
        NearSingularEdge: If z lies inside a pole guard
    """
    H = assemble_H(g, z, pole_guard)
    if g.n <= dense_limit:
        sign, _ = np.linalg.slogdet(H.toarray())
        return int(sign)
    try:
        factor = spla.splu(H.tocsc())
    except RuntimeError:
        return 0
    diagonal = factor.U.diagonal()
    if np.any(diagonal == 0.0):
        return 0
    sign = -1 if np.count_nonzero(diagonal < 0) % 2 else 1
    return sign * _permutation_sign(factor.perm_r) * _permutation_sign(factor.perm_c)


def poles_between(g: MetricGraph, low: float, high: float) -> List[float]:
    """Values (k pi / l_e)^2 strictly between low and high, ascending, repeats kept."""
    if high <= 0 or high <= low:
        return []
    root_low = math.sqrt(max(low, 0.0))
    root_high = math.sqrt(high)
    values = []
    for length in np.unique(g.lengths):
        first = int(math.floor(root_low * length / math.pi)) + 1
        last = int(math.ceil(root_high * length / math.pi)) - 1
        values.extend((k * math.pi / length) ** 2 for k in range(first, last + 1))
    return sorted(value for value in values if low < value < high)


def sign_enclosure(g: MetricGraph, z: float, window: Tuple[float, float],
                   pole_guard: float = POLE_GUARD,
                   dense_limit: int = DENSE_SOLVE_LIMIT) -> Optional[Tuple[float, float, int]]:
    """
    A pole-free interval inside window across which det H changes sign.

    The window is cut at the poles it contains. The piece holding z is tried
    first, on the shorter side of z that shows a sign change; otherwise the
    piece with a sign change closest to z is taken. None when det H keeps its
    sign on every piece, as it does around a double root.

    Returns: (low, high, sign of det H at low)
    """
    low, high = sorted(float(v) for v in window)
    low = max(low, 1e-6 * high)
    if not low < high:
        return None

    offset = max(1e-6, 1e3 * pole_guard)
    edges = [low]
    for pole in poles_between(g, low, high):
        edges.extend([pole * (1.0 - offset), pole * (1.0 + offset)])
    edges.append(high)
    pieces = [(edges[k], edges[k + 1]) for k in range(0, len(edges), 2)
              if edges[k] < edges[k + 1]
              and is_admissible(g, edges[k], pole_guard) and is_admissible(g, edges[k + 1], pole_guard)]

    signs: Dict[float, int] = {}

    def sign_at(x: float) -> int:
        if x not in signs:
            signs[x] = det_sign(g, x, pole_guard, dense_limit)
        return signs[x]

    for lo, hi in pieces:
        if lo < z < hi and is_admissible(g, z, pole_guard):
            changes = [(a, b) for a, b in ((lo, z), (z, hi)) if sign_at(a) * sign_at(b) < 0]
            if changes:
                a, b = min(changes, key=lambda side: side[1] - side[0])
                return a, b, sign_at(a)

    best = None
    for lo, hi in pieces:
        if sign_at(lo) * sign_at(hi) < 0:
            distance = 0.0 if lo <= z <= hi else min(abs(z - lo), abs(z - hi))
            if best is None or distance < best[0]:
                best = (distance, lo, hi)
    if best is None:
        return None
    _, lo, hi = best
    return lo, hi, sign_at(lo)


def _safeguarded_newton(g: MetricGraph, z: float, enclosure: Tuple[float, float, int],
                        history: List[float], current: float, rcond_tol: float, maxit: int,
                        pole_guard: float, exact_rcond_limit: int, dense_limit: int) -> NewtonResult:
    # Newton steps that stay inside the sign bracket are taken as they are,
    # anything else bisects it; the bracket shrinks on every iteration.
    low, high, sign_low = enclosure
    for iteration in range(1, maxit + 1):
        z_next = None
        if low <= z <= high:
            try:
                z_next = newton_trace_step(g, z, pole_guard, dense_limit)
            except SingularIterate:
                logger.debug("H(z) exactly singular at z=%r; accepting as root", z)
                return NewtonResult(value=z, iterations=iteration, rcond=0.0, status=CONVERGED,
                                    history=history)
            except FlatDeterminant:
                z_next = None
        bisected = z_next is None or not low < z_next < high or not is_admissible(g, z_next, pole_guard)
        if bisected:
            z_next = 0.5 * (low + high)

        z = z_next
        history.append(z)
        current = rcond(assemble_H(g, z, pole_guard), exact_rcond_limit)
        logger.debug("Newton-trace %d: z=%.15g rcond=%.3e bracket=[%.15g, %.15g]%s",
                     iteration, z, current, low, high, " (bisected)" if bisected else "")
        if current < rcond_tol:
            return NewtonResult(value=z, iterations=iteration, rcond=current, status=CONVERGED,
                                history=history)

        sign = det_sign(g, z, pole_guard, dense_limit)
        if sign == 0:
            return NewtonResult(value=z, iterations=iteration, rcond=current, status=CONVERGED,
                                history=history)
        if sign == sign_low:
            low = z
        else:
            high = z
        if high - low <= 8 * np.finfo(float).eps * high:
            logger.debug("Sign bracket collapsed at z=%r with rcond %.3e", z, current)
            return NewtonResult(value=z, iterations=iteration, rcond=current, status=MAX_ITERATIONS,
                                history=history)

    return NewtonResult(value=z, iterations=maxit, rcond=current, status=MAX_ITERATIONS, history=history)


def solve_newton_trace(g: MetricGraph, z_init: float, rcond_tol: float = 1e-10, maxit: int = 1000,
                       pole_guard: float = POLE_GUARD, max_halvings: int = 30,
                       exact_rcond_limit: int = 200,
                       dense_limit: int = DENSE_SOLVE_LIMIT,
                       bracket: Optional[Tuple[float, float]] = None) -> NewtonResult:
    """
    Run the Newton-trace iteration from z_init.

    Stops with status converged once rcond(H(z)) < rcond_tol, or with
    max_iterations after maxit steps.

    With a bracket (the floor/ceil interval that produced z_init), the
    iterates are confined to an interval of search_window(*bracket) across
    which det H changes sign: Newton steps leaving it are replaced by
    bisection. When no sign change is found the plain iteration runs.

    In the plain iteration a step that leaves the admissible region
    (non-positive z or inside a pole guard) is halved toward the previous
    iterate; after max_halvings the run ends with singularity_encountered.

    Raises:
        NearSingularEdge: If z_init itself lies inside a pole guard
    """
    if not z_init > 0:
        raise ValueError(f"Initial guess must be positive, got {z_init!r}")
    z = float(z_init)
    history = [z]
    current = rcond(assemble_H(g, z, pole_guard), exact_rcond_limit)
    if current < rcond_tol:
        return NewtonResult(value=z, iterations=0, rcond=current, status=CONVERGED, history=history)

    if bracket is not None:
        enclosure = sign_enclosure(g, z, search_window(*bracket), pole_guard, dense_limit)
        if enclosure is not None:
            return _safeguarded_newton(g, z, enclosure, history, current, rcond_tol, maxit,
                                       pole_guard, exact_rcond_limit, dense_limit)
        logger.debug("det H keeps its sign around z=%r; running unbracketed", z)

    for iteration in range(1, maxit + 1):
        try:
            z_next = newton_trace_step(g, z, pole_guard, dense_limit)
        except SingularIterate:
            logger.debug("H(z) exactly singular at z=%r; accepting as root", z)
            return NewtonResult(value=z, iterations=iteration, rcond=0.0, status=CONVERGED,
                                history=history)
        except FlatDeterminant:
            logger.debug("Flat determinant at z=%r; the iterate cannot move", z)
            return NewtonResult(value=z, iterations=iteration, rcond=current, status=MAX_ITERATIONS,
                                history=history)

        halvings = 0
        while not is_admissible(g, z_next, pole_guard):
            if halvings == max_halvings or not math.isfinite(z_next):
                logger.debug("Step from z=%r could not be damped into the admissible region", z)
                return NewtonResult(value=z, iterations=iteration, rcond=current,
                                    status=SINGULARITY_ENCOUNTERED, history=history)
            z_next = 0.5 * (z + z_next)
            halvings += 1

        z = z_next
        history.append(z)
        current = rcond(assemble_H(g, z, pole_guard), exact_rcond_limit)
        logger.debug("Newton-trace %d: z=%.15g rcond=%.3e halvings=%d", iteration, z, current, halvings)
        if current < rcond_tol:
            return NewtonResult(value=z, iterations=iteration, rcond=current, status=CONVERGED,
                                history=history)

    return NewtonResult(value=z, iterations=maxit, rcond=current, status=MAX_ITERATIONS, history=history)


def nullvector(g: MetricGraph, value: float, nullspace_rtol: float = 1e-8,
               pole_guard: float = POLE_GUARD) -> np.ndarray:
    """
    Orthonormal basis of the numerical null space of H(value), as columns.

    Singular directions with sigma / sigma_max below
    max(nullspace_rtol, 1e3 * n * eps) span the null space; its dimension is
    the multiplicity of the eigenvalue.

    Raises:
        NotSingular: If H(value) has no numerical null space
    """
    H = assemble_H(g, value, pole_guard).toarray()
    _, singular_values, vt = la.svd(H)
    if singular_values[0] == 0.0:
        return np.eye(g.n)
    ratios = singular_values / singular_values[0]
    threshold = max(nullspace_rtol, 1e3 * g.n * np.finfo(float).eps)
    mask = ratios <= threshold
    if not np.any(mask):
        raise NotSingular(f"H({value!r}) is not singular: sigma_min / sigma_max = {ratios[-1]:.3e}")
    return vt[mask].T


def nonvertex_candidates(g: MetricGraph, upper: float) -> List[float]:
    """Distinct values (k pi / l_e)^2 <= upper, k >= 1, in ascending order."""
    if upper <= 0:
        return []
    root = math.sqrt(upper)
    values = []
    for length in np.unique(g.lengths):
        count = int(math.floor(root * length / math.pi))
        values.extend((k * math.pi / length) ** 2 for k in range(1, count + 1))
    values.sort()
    distinct: List[float] = []
    for value in values:
        if not distinct or value - distinct[-1] > 1e-12 * value:
            distinct.append(value)
    return distinct


def rcond_scan(g: MetricGraph, z_values: Iterable[float], pole_guard: float = POLE_GUARD,
               exact_limit: int = 200) -> List[Tuple[float, Optional[float]]]:
    """Reciprocal condition number of H(z) per sample; None inside a pole guard."""
    samples = []
    for z in z_values:
        z = float(z)
        try:
            samples.append((z, rcond(assemble_H(g, z, pole_guard), exact_limit)))
        except NearSingularEdge:
            samples.append((z, None))
    return samples
