"""
Unit tests for eigenfunction reconstruction and checks.
"""

import math

import numpy as np
import pytest

from lib.eigenfunctions import (
    constant_eigenfunction,
    eigenfunctions_for,
    evaluate,
    inner_product,
    reconstruct,
    residuals,
    sample,
)
from lib.errors import NonVertexLambda, NotNullvector, OutOfRange

THIRD = (math.pi / 3) ** 2
TWO_THIRDS = (2 * math.pi / 3) ** 2
HALF = (math.pi / 2) ** 2
PATH_PHI = [1.0, 0.5, -1.0]


@pytest.fixture
def path_mode(path_graph):
    return reconstruct(path_graph, THIRD, PATH_PHI)


class TestReconstruct:
    """Tests for building eigenfunctions from vertex values."""

    def test_interval_cosine(self, path_mode):
        # normalized cos(pi x / 3) on [0, 3] has amplitude sqrt(2 / 3)
        scale = math.sqrt(2.0 / 3.0)
        assert evaluate(path_mode, 0, 0.5) == pytest.approx(scale * math.cos(math.pi / 6))
        assert evaluate(path_mode, 1, 1.0) == pytest.approx(-0.5 * scale)

    def test_normalized(self, path_mode):
        assert inner_product(path_mode, path_mode) == pytest.approx(1.0, abs=1e-10)

    def test_endpoints_match_vertices(self, path_mode):
        assert evaluate(path_mode, 0, 0.0) == pytest.approx(path_mode.vertex_values[0])
        assert evaluate(path_mode, 0, 1.0) == pytest.approx(path_mode.vertex_values[1])
        assert evaluate(path_mode, 1, 2.0) == pytest.approx(path_mode.vertex_values[2])

    def test_zero_vector(self, path_graph):
        with pytest.raises(NotNullvector):
            reconstruct(path_graph, THIRD, [0.0, 0.0, 0.0])

    def test_not_a_nullvector(self, path_graph):
        with pytest.raises(NotNullvector):
            reconstruct(path_graph, THIRD, [1.0, 1.0, 1.0])

    def test_wrong_length(self, path_graph):
        with pytest.raises(NotNullvector):
            reconstruct(path_graph, THIRD, [1.0, 0.5])

    def test_nonvertex_value(self, path_graph):
        with pytest.raises(NonVertexLambda):
            reconstruct(path_graph, math.pi ** 2, PATH_PHI)

    def test_zero_eigenvalue_rejected(self, path_graph):
        with pytest.raises(ValueError):
            reconstruct(path_graph, 0.0, [1.0, 1.0, 1.0])


class TestConstantEigenfunction:
    """Tests for the ground state."""

    def test_value(self, path_graph):
        f = constant_eigenfunction(path_graph)
        assert evaluate(f, 1, 0.7) == pytest.approx(1.0 / math.sqrt(3.0))
        assert inner_product(f, f) == pytest.approx(1.0)

    def test_orthogonal_to_excited_state(self, path_graph, path_mode):
        assert inner_product(constant_eigenfunction(path_graph), path_mode) == pytest.approx(0.0, abs=1e-12)

    def test_eigenfunctions_for_zero(self, path_graph):
        functions = eigenfunctions_for(path_graph, 0.0)
        assert len(functions) == 1
        assert functions[0].value == 0.0


class TestEigenfunctionsFor:
    """Tests for eigenspaces from the null space of H."""

    def test_simple_eigenvalue(self, path_graph):
        functions = eigenfunctions_for(path_graph, THIRD)
        assert len(functions) == 1
        assert abs(inner_product(functions[0], reconstruct(path_graph, THIRD, PATH_PHI))) == pytest.approx(1.0)

    def test_double_eigenvalue_orthonormal(self, star_graph):
        functions = eigenfunctions_for(star_graph, HALF)
        assert len(functions) == 2
        gram = np.array([[inner_product(f, h) for h in functions] for f in functions])
        assert gram == pytest.approx(np.eye(2), abs=1e-10)

    def test_distinct_eigenvalues_orthogonal(self, path_graph):
        first = eigenfunctions_for(path_graph, THIRD)[0]
        second = eigenfunctions_for(path_graph, TWO_THIRDS)[0]
        assert inner_product(first, second) == pytest.approx(0.0, abs=1e-10)

    def test_different_graphs(self, path_graph, star_graph, path_mode):
        with pytest.raises(ValueError):
            inner_product(path_mode, constant_eigenfunction(star_graph))


class TestEvaluate:
    """Tests for pointwise evaluation."""

    def test_vectorized(self, path_mode):
        values = evaluate(path_mode, 1, np.array([0.0, 1.0, 2.0]))
        assert values.shape == (3,)

    def test_outside_edge(self, path_mode):
        with pytest.raises(OutOfRange):
            evaluate(path_mode, 0, 1.5)

    def test_unknown_edge(self, path_mode):
        with pytest.raises(OutOfRange):
            evaluate(path_mode, 2, 0.0)


class TestResiduals:
    """Tests for the Neumann-Kirchhoff checks."""

    def test_eigenpair(self, path_graph, path_mode):
        checks = residuals(path_mode, path_graph)
        assert checks.continuity_gap <= 1e-12
        assert checks.kirchhoff_max <= 1e-10
        assert checks.ode_residual <= 1e-10

    def test_star_eigenspace(self, star_graph):
        for f in eigenfunctions_for(star_graph, HALF):
            checks = residuals(f, star_graph)
            assert checks.continuity_gap <= 1e-10
            assert checks.kirchhoff_max <= 1e-8 * math.sqrt(HALF) * np.max(np.abs(f.vertex_values))

    def test_perturbed_eigenvalue_detected(self, path_graph):
        f = reconstruct(path_graph, THIRD * (1 + 1e-3), PATH_PHI, residual_rtol=1.0)
        assert residuals(f, path_graph).kirchhoff_max > 1e-4


class TestSample:
    """Tests for sampling along the edges."""

    def test_rows(self, path_mode):
        rows = sample(path_mode, resolution=5)
        assert len(rows) == 10
        assert rows[0][:2] == (0, 0.0)
        assert rows[-1][:2] == (1, 2.0)

    def test_invalid_resolution(self, path_mode):
        with pytest.raises(ValueError):
            sample(path_mode, resolution=1)
