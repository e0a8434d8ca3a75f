import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dssd.core import run_to_convergence
from dssd.electrical import check_fixed_point, grounded_laplacian, potentials
from dssd.graph import Graph, connected_to_source

from conftest import connected_rgg, random_graph


def test_single_node():
    assert potentials(Graph(1), 3.0) == pytest.approx([3.0])


def test_two_nodes():
    # v1 + (v1 - v2) = 3, v2 + (v2 - v1) = 0
    assert potentials(Graph(2, [(1, 2)]), 3.0) == pytest.approx([2.0, 1.0])


def test_star():
    assert potentials(Graph(4, [(1, 2), (1, 3), (1, 4)]), 5.0) == pytest.approx([2.0, 1.0, 1.0, 1.0])


def test_rejects_nonpositive_strength():
    with pytest.raises(ValueError):
        potentials(Graph(2), -1.0)


def test_grounded_laplacian_diagonally_dominant(rng):
    for _ in range(10):
        M = grounded_laplacian(random_graph(rng, 8, p=0.6))
        off = np.abs(M).sum(axis=1) - np.abs(np.diag(M))
        assert np.all(np.diag(M) - off >= 1.0)


class TestCheckFixedPoint:
    def test_exact_potentials(self, rng):
        g, _ = connected_rgg(rng, 30)
        rep = check_fixed_point(g, potentials(g, 4.0), 4.0, tol=1e-12)
        assert rep.ok and rep.residual <= 1e-12

    def test_zero_vector(self, rng):
        g, _ = connected_rgg(rng, 10)
        rep = check_fixed_point(g, np.zeros(10), 2.5)
        assert rep.residual == 1.0 and not rep.ok

    def test_iterated_fixed_point(self, rng):
        g, _ = connected_rgg(rng, 25)
        x, ok = run_to_convergence(g, 10.0, tol=1e-10)
        assert ok
        assert check_fixed_point(g, x.x, 10.0, tol=1e-8).ok

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            check_fixed_point(Graph(3), np.zeros(2), 1.0)


@settings(max_examples=40)
@given(st.integers(1, 10), st.integers(0, 2**32 - 1))
def test_positive_exactly_on_source_component(n, seed):
    g = random_graph(np.random.default_rng(seed), n, p=0.3)
    v = potentials(g, 1.0)
    reach = connected_to_source(g)
    assert np.all(v[reach] > 0)
    assert np.all(v[~reach] == 0)


@settings(max_examples=40)
@given(st.integers(1, 10), st.floats(0.01, 100), st.integers(0, 2**32 - 1))
def test_linear_in_source_strength(n, alpha, seed):
    g = random_graph(np.random.default_rng(seed), n)
    assert np.allclose(potentials(g, alpha * 2.0), alpha * potentials(g, 2.0), rtol=1e-10, atol=0)


def test_iteration_agrees_with_oracle(rng):
    tol = 1e-9
    for _ in range(10):
        g, _ = connected_rgg(rng, int(rng.integers(5, 40)))
        x, ok = run_to_convergence(g, 7.0, tol=tol)
        assert ok
        assert np.max(np.abs(x.x - potentials(g, 7.0))) / 7.0 <= 10 * tol
