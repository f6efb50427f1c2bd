"""
Unit tests for the nonlinear eigenvalue problem and the Newton-trace solver.
"""

import math

import numpy as np
import pytest

from lib.errors import FlatDeterminant, NearSingularEdge, NotSingular
from lib.graph import metric_graph
from lib.nep import (
    CONVERGED,
    MAX_ITERATIONS,
    assemble_H,
    assemble_H_prime,
    det_sign,
    is_admissible,
    newton_trace_step,
    nonvertex_candidates,
    nullvector,
    poles_between,
    rcond,
    rcond_scan,
    search_window,
    sign_enclosure,
    solve_newton_trace,
)

THIRD = (math.pi / 3) ** 2
HALF = (math.pi / 2) ** 2


@pytest.fixture
def irregular_star():
    return metric_graph(5, [(0, 1), (0, 2), (0, 3), (3, 4)], [1.1, 1.7, 0.6, 1.35])


class TestAssembleH:
    """Tests for the vertex matrix H(z)."""

    def test_single_edge(self, single_edge):
        H = assemble_H(single_edge, HALF).toarray()
        assert H == pytest.approx(np.array([[0.0, 1.0], [1.0, 0.0]]), abs=1e-15)

    def test_path_at_root(self, path_graph):
        H = assemble_H(path_graph, THIRD).toarray()
        s = 1.0 / math.sqrt(3.0)
        expected = np.array([[-s, 2 * s, 0.0], [2 * s, 0.0, 2 * s], [0.0, 2 * s, s]])
        assert H == pytest.approx(expected, abs=1e-14)
        assert abs(np.linalg.det(H)) < 1e-14

    def test_symmetric_with_graph_sparsity(self, irregular_star):
        H = assemble_H(irregular_star, 1.3)
        dense = H.toarray()
        assert np.array_equal(dense, dense.T)
        pattern = irregular_star.graph.adjacency_matrix().toarray() + np.eye(5)
        assert np.array_equal(dense != 0, pattern != 0)

    def test_near_pole(self, single_edge):
        with pytest.raises(NearSingularEdge) as info:
            assemble_H(single_edge, math.pi ** 2)
        assert info.value.edge == 0

    def test_non_positive_z(self, single_edge):
        with pytest.raises(ValueError):
            assemble_H(single_edge, 0.0)

    def test_single_edge_determinant(self, single_edge):
        for z in np.linspace(0.05, 60.0, 100):
            if is_admissible(single_edge, z, 1e-3):
                assert np.linalg.det(assemble_H(single_edge, z).toarray()) == pytest.approx(-1.0, rel=1e-8)

    def test_admissibility(self, single_edge):
        assert is_admissible(single_edge, 1.0)
        assert not is_admissible(single_edge, math.pi ** 2)
        assert not is_admissible(single_edge, -1.0)
        assert not is_admissible(single_edge, float("inf"))


class TestAssembleHPrime:
    """Tests for the analytic derivative of H."""

    def test_single_edge(self, single_edge):
        dH = assemble_H_prime(single_edge, HALF).toarray()
        assert dH == pytest.approx(np.eye(2) / math.pi, abs=1e-15)

    @pytest.mark.parametrize("z", [0.4, 1.3, 2.9, 7.7])
    def test_matches_finite_differences(self, irregular_star, z):
        delta = 1e-6 * z
        numeric = (assemble_H(irregular_star, z + delta).toarray()
                   - assemble_H(irregular_star, z - delta).toarray()) / (2 * delta)
        analytic = assemble_H_prime(irregular_star, z).toarray()
        assert analytic == pytest.approx(numeric, rel=1e-6, abs=1e-9)

    def test_symmetric(self, irregular_star):
        dH = assemble_H_prime(irregular_star, 2.2).toarray()
        assert np.array_equal(dH, dH.T)


class TestRcond:
    """Tests for the reciprocal condition number."""

    def test_identity(self):
        assert rcond(np.eye(4)) == pytest.approx(1.0)

    def test_permutation(self):
        assert rcond(np.array([[0.0, 1.0], [1.0, 0.0]])) == pytest.approx(1.0)

    def test_zero_matrix(self):
        assert rcond(np.zeros((3, 3))) == 0.0

    def test_scale_invariant(self):
        M = np.array([[2.0, 1.0], [1.0, 3.0]])
        assert rcond(1e8 * M) == pytest.approx(rcond(M))

    def test_estimate_path(self):
        assert rcond(np.eye(3), exact_limit=0) == pytest.approx(1.0)

    def test_estimate_singular(self):
        assert rcond(np.ones((2, 2)), exact_limit=0) == 0.0

    def test_small_at_root(self, path_graph):
        assert rcond(assemble_H(path_graph, THIRD)) < 1e-10

    def test_sparse_input(self, path_graph):
        H = assemble_H(path_graph, 1.5)
        assert rcond(H) == pytest.approx(rcond(H.toarray()))


class TestNewtonTraceStep:
    """Tests for a single Newton-trace update."""

    def test_moves_toward_root(self, path_graph):
        z_next = newton_trace_step(path_graph, 1.05)
        assert abs(z_next - THIRD) < abs(1.05 - THIRD)

    def test_sparse_solve_matches_dense(self, irregular_star):
        dense = newton_trace_step(irregular_star, 1.3)
        sparse = newton_trace_step(irregular_star, 1.3, dense_limit=0)
        assert sparse == pytest.approx(dense, rel=1e-12)

    def test_flat_determinant(self, single_edge):
        with pytest.raises(FlatDeterminant):
            newton_trace_step(single_edge, 1.0)


class TestSolveNewtonTrace:
    """Tests for the full Newton-trace iteration."""

    def test_path(self, path_graph):
        result = solve_newton_trace(path_graph, 1.0)
        assert result.status == CONVERGED
        assert result.value == pytest.approx(THIRD, rel=1e-9)
        assert result.iterations <= 10
        assert result.rcond < 1e-10

    def test_star_double_root(self, star_graph):
        result = solve_newton_trace(star_graph, 2.3)
        assert result.converged
        assert result.value == pytest.approx(HALF, rel=1e-7)

    def test_single_edge_never_converges(self, single_edge):
        result = solve_newton_trace(single_edge, 1.0)
        assert result.status == MAX_ITERATIONS
        # the determinant is constant, so the first step already stalls
        assert result.iterations == 1
        assert result.history == [1.0]

    def test_history(self, path_graph):
        result = solve_newton_trace(path_graph, 1.0)
        assert result.history[0] == 1.0
        assert result.history[-1] == result.value
        assert len(result.history) == result.iterations + 1

    def test_deterministic(self, irregular_star):
        first = solve_newton_trace(irregular_star, 1.0)
        second = solve_newton_trace(irregular_star, 1.0)
        assert first.history == second.history

    def test_already_converged(self, path_graph):
        result = solve_newton_trace(path_graph, THIRD)
        assert result.iterations == 0
        assert result.converged

    def test_iteration_cap(self, path_graph):
        result = solve_newton_trace(path_graph, 1.0, maxit=1)
        assert result.status == MAX_ITERATIONS
        assert result.iterations == 1

    def test_invalid_guess(self, path_graph):
        with pytest.raises(ValueError):
            solve_newton_trace(path_graph, -1.0)

    def test_guess_on_pole(self, single_edge):
        with pytest.raises(NearSingularEdge):
            solve_newton_trace(single_edge, math.pi ** 2)

    def test_to_dict(self, path_graph):
        data = solve_newton_trace(path_graph, 1.0).to_dict()
        assert set(data) == {"lambda", "iterations", "rcond", "status", "history"}


class TestDetSign:
    """Tests for the sign of det H(z) and the pole-free sign brackets built on it."""

    def test_constant_on_single_edge(self, single_edge):
        # det H = cot^2 - 1 / sin^2 = -1 everywhere
        assert det_sign(single_edge, 1.0) == -1
        assert det_sign(single_edge, 20.0) == -1

    def test_changes_across_simple_root(self, path_graph):
        assert det_sign(path_graph, 0.9 * THIRD) == -det_sign(path_graph, 1.1 * THIRD)

    @pytest.mark.parametrize("z", [0.4, 1.3, 2.9, 6.1])
    def test_sparse_matches_dense(self, irregular_star, z):
        assert det_sign(irregular_star, z, dense_limit=0) == det_sign(irregular_star, z)

    def test_poles_between(self, path_graph):
        poles = poles_between(path_graph, 0.0, 10.0)
        assert poles == pytest.approx([HALF, math.pi ** 2, math.pi ** 2])
        assert poles_between(path_graph, HALF, math.pi ** 2) == []

    def test_search_window(self):
        low, high = search_window(1.0, 2.0)
        assert low == pytest.approx(0.95)
        assert high == pytest.approx(2.05)
        assert search_window(2.0, 1.0) == (low, high)

    def test_enclosure_on_side_of_root(self, path_graph):
        low, high, sign_low = sign_enclosure(path_graph, 1.3, (0.8, 1.5))
        assert low < THIRD < high
        assert high == pytest.approx(1.3)
        assert sign_low == det_sign(path_graph, low)

    def test_enclosure_skips_rootless_piece(self, path_graph):
        # (pi / 2)^2 cuts the window; only the upper piece holds a root
        low, high, _ = sign_enclosure(path_graph, 2.0, (1.6, 4.5))
        assert HALF < low < 4 * THIRD < high

    def test_no_enclosure_for_double_root(self, star_graph):
        assert sign_enclosure(star_graph, 2.3, (2.2, 2.8)) is None


class TestBracketedNewtonTrace:
    """Tests for the Newton-trace iteration confined to a floor/ceil bracket."""

    def test_stays_inside_window(self, path_graph):
        low, high = search_window(1.6, 4.5)
        result = solve_newton_trace(path_graph, 2.0, bracket=(1.6, 4.5))
        assert result.converged
        assert result.value == pytest.approx(4 * THIRD, rel=1e-9)
        assert all(low <= z <= high for z in result.history[1:])

    def test_converges_from_the_side(self, path_graph):
        result = solve_newton_trace(path_graph, 1.3 * THIRD, bracket=(0.9 * THIRD, 1.35 * THIRD))
        assert result.converged
        assert result.value == pytest.approx(THIRD, rel=1e-9)
        assert len(result.history) == result.iterations + 1

    def test_double_root_falls_back(self, star_graph):
        result = solve_newton_trace(star_graph, 2.3, bracket=(2.2, 2.8))
        assert result.converged
        assert result.value == pytest.approx(HALF, rel=1e-7)

    def test_sparse_path(self, path_graph):
        dense = solve_newton_trace(path_graph, 2.0, bracket=(1.6, 4.5))
        sparse = solve_newton_trace(path_graph, 2.0, bracket=(1.6, 4.5), dense_limit=0)
        assert sparse.converged
        assert sparse.value == pytest.approx(dense.value, rel=1e-9)


class TestNullvector:
    """Tests for the null space of H at an eigenvalue."""

    def test_path(self, path_graph):
        basis = nullvector(path_graph, THIRD)
        assert basis.shape == (3, 1)
        phi = basis[:, 0] / basis[0, 0]
        assert phi == pytest.approx([1.0, 0.5, -1.0], abs=1e-10)

    def test_star_multiplicity(self, star_graph):
        basis = nullvector(star_graph, HALF)
        assert basis.shape == (4, 2)
        assert basis.T @ basis == pytest.approx(np.eye(2), abs=1e-12)

    def test_residual(self, star_graph):
        H = assemble_H(star_graph, HALF).toarray()
        basis = nullvector(star_graph, HALF)
        assert np.linalg.norm(H @ basis) <= 1e-8 * np.linalg.norm(H, 2)

    def test_not_singular(self, path_graph):
        with pytest.raises(NotSingular):
            nullvector(path_graph, 1.5)


class TestNonvertexCandidates:
    """Tests for the (k pi / l_e)^2 enumeration."""

    def test_path(self, path_graph):
        candidates = nonvertex_candidates(path_graph, 12.0)
        assert candidates == pytest.approx([HALF, math.pi ** 2])

    def test_empty_window(self, path_graph):
        assert nonvertex_candidates(path_graph, 0.0) == []


class TestRcondScan:
    """Tests for sampling rcond(H(z))."""

    def test_dips_at_roots(self, path_graph):
        z_values = np.linspace(0.5, 5.0, 1000)
        samples = rcond_scan(path_graph, z_values)
        assert len(samples) == 1000
        values = np.array([np.nan if r is None else r for _, r in samples])
        near_first = np.abs(z_values - THIRD) < 0.01
        # stay clear of both roots and of the pole (pi / 2)^2 of the length-2 edge
        far = ((np.abs(z_values - THIRD) > 0.3) & (np.abs(z_values - (2 * math.pi / 3) ** 2) > 0.3)
               & (np.abs(z_values - HALF) > 0.3))
        assert np.nanmin(values[near_first]) < 1e-2
        assert np.nanmin(values[near_first]) < 0.1 * np.nanmin(values[far])

    def test_pole_sample(self, single_edge):
        samples = rcond_scan(single_edge, [1.0, math.pi ** 2])
        assert samples[0][1] > 0.0
        assert samples[1] == (math.pi ** 2, None)
