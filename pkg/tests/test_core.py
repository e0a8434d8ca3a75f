import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dssd.core import (StateVector, cut_beliefs, iteration_matrix, run_to_convergence, step, step_vectorized,
                       update_value)
from dssd.graph import Graph

from conftest import random_graph

STAR = Graph(4, [(1, 2), (1, 3), (1, 4)])
EDGE = Graph(2, [(1, 2)])


class TestStep:
    def test_single_node(self):
        x = step(StateVector.zeros(1, 5.0), Graph(1))
        assert x.x.tolist() == [5.0] and x.k == 1
        assert step(x, Graph(1)).x.tolist() == [5.0]

    def test_isolated_nonsource_goes_to_zero(self):
        x = step(StateVector([1.0, 7.0, 3.0], 2.0), Graph(3, [(1, 2)]))
        assert x.x[2] == 0.0

    def test_two_node_fixed_point(self):
        # x1 = (x2 + 3) / 2, x2 = x1 / 2  =>  (2, 1)
        x = StateVector([2.0, 1.0], 3.0)
        assert np.allclose(step(x, EDGE).x, [2.0, 1.0], rtol=0, atol=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            step(StateVector.zeros(3, 1.0), EDGE)
        with pytest.raises(ValueError):
            step_vectorized(StateVector.zeros(3, 1.0), EDGE)

    def test_nonpositive_strength(self):
        with pytest.raises(ValueError):
            StateVector.zeros(2, 0.0)

    def test_state_is_read_only(self):
        x = StateVector.zeros(2, 1.0)
        with pytest.raises(ValueError):
            x.x[0] = 1.0

    def test_update_value_empty_sum(self):
        assert update_value([], True, 4.0) == 4.0
        assert update_value([], False, 4.0) == 0.0


class TestVectorized:
    def test_agrees_with_scalar_on_random_graphs(self, rng):
        for _ in range(20):
            g = random_graph(rng, 10)
            x = StateVector(rng.random(10) * 5, 3.0)
            a, b = step(x, g).x, step_vectorized(x, g).x
            assert np.allclose(a, b, rtol=1e-12, atol=0)

    def test_edgeless(self):
        assert step_vectorized(StateVector([1.0, 2.0, 3.0], 4.0), Graph(3)).x.tolist() == [4.0, 0.0, 0.0]

    def test_two_node_fixed_point(self):
        assert np.allclose(step_vectorized(StateVector([2.0, 1.0], 3.0), EDGE).x, [2.0, 1.0])


class TestCutBeliefs:
    def test_below_threshold(self):
        assert cut_beliefs(np.array([0.005]), 0.01).beliefs.tolist() == [1]

    def test_above_threshold(self):
        assert cut_beliefs(np.array([0.02]), 0.01).beliefs.tolist() == [0]

    def test_boundary_inclusive(self):
        assert cut_beliefs(np.array([0.01]), 0.01).beliefs.tolist() == [1]

    def test_nonpositive_threshold(self):
        with pytest.raises(ValueError):
            cut_beliefs(np.array([1.0]), 0.0)

    def test_source_above_threshold_believes_connected(self):
        x = step(StateVector.zeros(3, 2.0), Graph(3))
        assert cut_beliefs(x, 0.5).beliefs.tolist() == [0, 1, 1]


class TestRunToConvergence:
    def test_two_node(self):
        x, ok = run_to_convergence(EDGE, 3.0, tol=1e-10)
        assert ok
        assert np.allclose(x.x, [2.0, 1.0], atol=1e-8)

    def test_single_node_one_step(self):
        x, ok = run_to_convergence(Graph(1), 7.0)
        assert ok and x.x.tolist() == [7.0]
        # the stopping rule is met on the second iterate (no change)
        assert x.k <= 2

    def test_star(self):
        # grounded star: 4 v0 - 3 vl = s and 2 vl = v0  =>  v0 = 2s/5, vl = s/5
        x, ok = run_to_convergence(STAR, 5.0, tol=1e-12)
        assert ok
        assert np.allclose(x.x, [2.0, 1.0, 1.0, 1.0], atol=1e-9)

    def test_reports_nonconvergence(self):
        g = Graph(6, [(i, i + 1) for i in range(1, 6)])
        x, ok = run_to_convergence(g, 1.0, tol=1e-15, max_iter=3)
        assert not ok and x.k == 3

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            run_to_convergence(EDGE, 1.0, tol=0)
        with pytest.raises(ValueError):
            run_to_convergence(EDGE, 1.0, max_iter=0)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 9), st.floats(0.1, 1e4), st.integers(0, 2**32 - 1))
def test_nonnegative_and_bounded(n, s, seed):
    rng = np.random.default_rng(seed)
    x = StateVector.zeros(n, s)
    for _ in range(30):
        x = step(x, random_graph(rng, n))
        assert np.all(x.x >= 0)
        assert np.max(x.x) <= s * (1 + 1e-12)


@settings(max_examples=60)
@given(st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_iteration_matrix_row_sums(n, seed):
    J = iteration_matrix(random_graph(np.random.default_rng(seed), n, p=0.7))
    assert np.all(J >= 0)
    assert np.linalg.norm(J, np.inf) <= (n - 1) / n + 1e-15
