"""
Eigenfunctions of a metric graph reconstructed from vertex values.

On edge e = (v_i, v_j), oriented from the lower to the higher vertex index,
an eigenfunction for lambda = k^2 is phi_e(x) = A_e cos(kx) + B_e sin(kx) with
A_e = Phi(v_i) and B_e = (Phi(v_j) - Phi(v_i) cos(k l_e)) / sin(k l_e).
All L2 integrals are evaluated in closed form.
"""

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np
import scipy.linalg as la
import scipy.sparse.linalg as spla

from .errors import NonVertexLambda, NotNullvector, OutOfRange
from .graph import MetricGraph
from .nep import POLE_GUARD, assemble_H, nullvector


@dataclass(frozen=True, eq=False)
class Eigenfunction:
    """
    An L2-normalized eigenfunction.

    Attributes:
        value: The eigenvalue lambda
        vertex_values: Phi, the values at the vertices
        A: Cosine coefficient per edge
        B: Sine coefficient per edge
        lengths: Edge lengths of the graph it lives on
    """
    value: float
    vertex_values: np.ndarray
    A: np.ndarray
    B: np.ndarray
    lengths: np.ndarray

    @property
    def wavenumber(self) -> float:
        return math.sqrt(self.value)


@dataclass(frozen=True)
class Residuals:
    continuity_gap: float
    kirchhoff_max: float
    ode_residual: float


def _integral_cos(w: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    # integral of cos(w x) over [0, l]
    safe = np.where(w == 0.0, 1.0, w)
    return np.where(w == 0.0, lengths, np.sin(w * lengths) / safe)


def _integral_sin(w: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    # integral of sin(w x) over [0, l], written without cancellation
    safe = np.where(w == 0.0, 1.0, w)
    return np.where(w == 0.0, 0.0, 2.0 * np.sin(0.5 * w * lengths) ** 2 / safe)


def _edge_products(f1: Eigenfunction, f2: Eigenfunction) -> np.ndarray:
    a, b = f1.wavenumber, f2.wavenumber
    lengths = f1.lengths
    diff = np.full(lengths.shape, a - b)
    total = np.full(lengths.shape, a + b)
    cc = 0.5 * (_integral_cos(diff, lengths) + _integral_cos(total, lengths))
    ss = 0.5 * (_integral_cos(diff, lengths) - _integral_cos(total, lengths))
    sc = 0.5 * (_integral_sin(total, lengths) + _integral_sin(diff, lengths))
    cs = 0.5 * (_integral_sin(total, lengths) - _integral_sin(diff, lengths))
    return f1.A * f2.A * cc + f1.B * f2.B * ss + f1.B * f2.A * sc + f1.A * f2.B * cs


def inner_product(f1: Eigenfunction, f2: Eigenfunction) -> float:
    """L2 inner product over the whole graph."""
    if f1.lengths.shape != f2.lengths.shape or not np.array_equal(f1.lengths, f2.lengths):
        raise ValueError("Eigenfunctions live on different graphs")
    return math.fsum(_edge_products(f1, f2).tolist())


def _normalized(f: Eigenfunction) -> Eigenfunction:
    scale = 1.0 / math.sqrt(inner_product(f, f))
    return Eigenfunction(value=f.value, vertex_values=f.vertex_values * scale,
                         A=f.A * scale, B=f.B * scale, lengths=f.lengths)


def constant_eigenfunction(g: MetricGraph) -> Eigenfunction:
    """The normalized constant eigenfunction of lambda = 0."""
    c = 1.0 / math.sqrt(g.total_length)
    return Eigenfunction(value=0.0, vertex_values=np.full(g.n, c), A=np.full(g.m, c),
                         B=np.zeros(g.m), lengths=g.lengths)


def reconstruct(g: MetricGraph, value: float, phi: Sequence[float], residual_rtol: float = 1e-8,
                pole_guard: float = POLE_GUARD) -> Eigenfunction:
    """
    Build the normalized eigenfunction with vertex values proportional to phi.

    Raises:
        NonVertexLambda: If sin(sqrt(value) l_e) vanishes on some edge
        NotNullvector: If phi is zero or H(value) phi is not small
    """
    if not value > 0:
        raise ValueError(f"lambda must be positive, got {value!r}; use constant_eigenfunction for 0")
    k = math.sqrt(value)
    sines = np.sin(k * g.lengths)
    if np.min(np.abs(sines)) <= pole_guard:
        raise NonVertexLambda(f"lambda={value!r} is a non-vertex value for edge {int(np.argmin(np.abs(sines)))}")
    phi = np.asarray(phi, dtype=float).ravel()
    if phi.shape[0] != g.n:
        raise NotNullvector(f"Expected {g.n} vertex values, got {phi.shape[0]}")
    phi_norm = np.linalg.norm(phi)
    if phi_norm == 0.0:
        raise NotNullvector("Vertex values are all zero")
    H = assemble_H(g, value, pole_guard)
    residual = np.linalg.norm(H @ phi)
    if residual > residual_rtol * spla.norm(H) * phi_norm:
        raise NotNullvector(f"||H(lambda) Phi|| = {residual:.3e} is too large for an eigenvector")

    i, j = g.edges[:, 0], g.edges[:, 1]
    A = phi[i]
    B = (phi[j] - phi[i] * np.cos(k * g.lengths)) / sines
    return _normalized(Eigenfunction(value=float(value), vertex_values=phi, A=A, B=B, lengths=g.lengths))


def orthonormal_family(g: MetricGraph, value: float, basis: np.ndarray,
                       residual_rtol: float = 1e-8) -> List[Eigenfunction]:
    """
    L2-orthonormal eigenfunctions spanning the eigenspace given by the columns
    of `basis` (vertex-value vectors).
    """
    basis = np.atleast_2d(np.asarray(basis, dtype=float).T).T
    functions = [reconstruct(g, value, column, residual_rtol) for column in basis.T]
    if len(functions) == 1:
        return functions
    gram = np.array([[inner_product(f, h) for h in functions] for f in functions])
    lower = la.cholesky(gram, lower=True)
    transform = la.solve_triangular(lower, np.eye(len(functions)), lower=True).T

    def combine(attribute: str) -> np.ndarray:
        return np.column_stack([getattr(f, attribute) for f in functions]) @ transform

    phis, As, Bs = combine("vertex_values"), combine("A"), combine("B")
    return [
        Eigenfunction(value=float(value), vertex_values=phis[:, r], A=As[:, r], B=Bs[:, r],
                      lengths=g.lengths)
        for r in range(len(functions))
    ]


def eigenfunctions_for(g: MetricGraph, value: float, nullspace_rtol: float = 1e-8) -> List[Eigenfunction]:
    """All orthonormal eigenfunctions of a vertex eigenvalue (or of lambda = 0)."""
    if value == 0.0:
        return [constant_eigenfunction(g)]
    return orthonormal_family(g, value, nullvector(g, value, nullspace_rtol))


def evaluate(f: Eigenfunction, edge: int, x: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """
    phi_e(x) for 0 <= x <= l_e, measured from the lower-indexed endpoint.

    Raises:
        OutOfRange: For an unknown edge or x outside the edge
    """
    if not 0 <= edge < f.lengths.shape[0]:
        raise OutOfRange(f"Edge {edge} does not exist")
    length = f.lengths[edge]
    points = np.asarray(x, dtype=float)
    slack = 1e-12 * length
    if np.any(points < -slack) or np.any(points > length + slack):
        raise OutOfRange(f"x must lie in [0, {length!r}] on edge {edge}")
    k = f.wavenumber
    values = f.A[edge] * np.cos(k * points) + f.B[edge] * np.sin(k * points)
    return float(values) if values.ndim == 0 else values


def residuals(f: Eigenfunction, g: MetricGraph, samples: int = 16) -> Residuals:
    """
    Continuity gap, Kirchhoff defect and ODE residual of f on g.

    The Kirchhoff defect at a vertex is the sum of outward derivatives over
    its incident edges; the ODE residual is max |phi'' + lambda phi| over
    `samples` points per edge.
    """
    k = f.wavenumber
    lengths = g.lengths
    cos_end, sin_end = np.cos(k * lengths), np.sin(k * lengths)
    start_values = f.A
    end_values = f.A * cos_end + f.B * sin_end
    i, j = g.edges[:, 0], g.edges[:, 1]
    continuity_gap = max(float(np.max(np.abs(start_values - f.vertex_values[i]))),
                         float(np.max(np.abs(end_values - f.vertex_values[j]))))

    outward = np.zeros(g.n)
    np.add.at(outward, i, k * f.B)
    np.add.at(outward, j, -k * (-f.A * sin_end + f.B * cos_end))
    kirchhoff_max = float(np.max(np.abs(outward)))

    t = np.linspace(0.0, 1.0, samples)
    x = lengths[:, None] * t[None, :]
    cosines, sines = np.cos(k * x), np.sin(k * x)
    values = f.A[:, None] * cosines + f.B[:, None] * sines
    second = -k * (k * f.A[:, None] * cosines + k * f.B[:, None] * sines)
    ode_residual = float(np.max(np.abs(second + f.value * values)))
    return Residuals(continuity_gap=continuity_gap, kirchhoff_max=kirchhoff_max, ode_residual=ode_residual)


def sample(f: Eigenfunction, resolution: int = 50) -> List[Tuple[int, float, float]]:
    """Rows (edge_index, x, value) at `resolution` evenly spaced points per edge."""
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    rows = []
    for edge, length in enumerate(f.lengths):
        xs = np.linspace(0.0, length, resolution)
        for x, value in zip(xs, evaluate(f, edge, xs)):
            rows.append((edge, float(x), float(value)))
    return rows
