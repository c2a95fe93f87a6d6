import json

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from hklab import zoo
from hklab.graph import (GraphError, WeightedGraph, combinatorial_interior, energy, gradient_norm,
                         graph_from_json, h_omega, laplacian_apply, lipschitz_constant, load_graph,
                         sandwiched_apply, save_graph, validate)


def random_graph(seed, n):
    return zoo.random_weighted(n, edge_prob=0.5, seed=seed)


def dense_laplacian(g):
    B = g.b.toarray()
    return (np.diag(B.sum(1)) - B) / g.m[:, None]


def test_laplacian_matches_definition(small_graphs, rng):
    for g in small_graphs:
        f = rng.standard_normal(g.n)
        want = np.array([sum(g.b[x, y] * (f[x] - f[y]) for y in range(g.n)) / g.m[x] for x in range(g.n)])
        assert np.allclose(laplacian_apply(g, f, dirichlet=False), want, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(3, 12))
def test_laplacian_symmetric_in_l2m(seed, n):
    g = random_graph(seed, n)
    r = np.random.default_rng(seed)
    f, h = r.standard_normal(n), r.standard_normal(n)
    lhs = np.sum(g.m * laplacian_apply(g, f, False) * h)
    rhs = np.sum(g.m * f * laplacian_apply(g, h, False))
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(3, 12))
def test_green_formula(seed, n):
    # <Delta f, f>_m = 1/2 sum_{x,y} b (f(x) - f(y))^2 = 1/2 || |grad f| ||^2
    g = random_graph(seed, n)
    f = np.random.default_rng(seed).standard_normal(n)
    quad = np.sum(g.m * laplacian_apply(g, f, False) * f)
    assert quad == pytest.approx(0.5 * energy(g, f), rel=1e-10, abs=1e-12)
    assert np.sum(g.m * gradient_norm(g, f) ** 2) == pytest.approx(energy(g, f), rel=1e-12)


def test_sandwiched_operator_conjugation(small_graphs, rng):
    for g in small_graphs:
        w, v = rng.uniform(-1, 1, g.n), rng.standard_normal(g.n)
        want = np.exp(w) * (dense_laplacian(g) @ (np.exp(-w) * v))
        assert np.allclose(sandwiched_apply(g, w, v, False), want, atol=1e-10)


def test_h_omega_constant_weight_is_zero(small_graphs):
    for g in small_graphs:
        assert h_omega(g, np.full(g.n, 3.0)) == 0.0


def test_h_omega_two_vertex(two_vertex):
    # sum_y b/m * 2(cosh(d) - 1) at either end
    assert h_omega(two_vertex, np.array([0.0, 0.7])) == pytest.approx(2 * (np.cosh(0.7) - 1), rel=1e-14)


def test_validate_reports_each_violation():
    b = sp.csr_matrix(np.array([[1.0, 2.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]))
    g = WeightedGraph.from_matrix(b, [1.0, -1.0, 1.0])
    kinds = {v.kind for v in validate(g)}
    assert {"loop", "symmetry", "measure positivity", "connectivity"} <= kinds


def test_validate_negative_weight():
    b = sp.csr_matrix(np.array([[0.0, -1.0], [-1.0, 0.0]]))
    kinds = {v.kind for v in validate(WeightedGraph.from_matrix(b, [1, 1]))}
    assert "nonnegativity" in kinds


def test_zoo_graphs_valid(small_graphs):
    for g in small_graphs:
        assert validate(g) == []


def test_json_roundtrip(tmp_path, small_graphs):
    for g in small_graphs:
        save_graph(g, tmp_path / "g.json")
        h = load_graph(tmp_path / "g.json")
        assert h.ids == g.ids and np.array_equal(h.m, g.m)
        assert abs(h.b - g.b).max() == 0
        assert h.dirichlet == g.dirichlet


@pytest.mark.parametrize("bad", [
    {"vertices": [{"id": "a", "m": 0}, {"id": "b", "m": 1}], "edges": [{"u": "a", "v": "b", "b": 1}]},
    {"vertices": [{"id": "a", "m": 1}, {"id": "b", "m": 1}], "edges": [{"u": "a", "v": "b", "b": 0}]},
    {"vertices": [{"id": "a", "m": 1}, {"id": "b", "m": 1}],
     "edges": [{"u": "a", "v": "b", "b": 1}, {"u": "b", "v": "a", "b": 1}]},
])
def test_loader_rejects(bad):
    with pytest.raises(GraphError):
        graph_from_json(json.loads(json.dumps(bad)))


def test_combinatorial_interior_path():
    g = zoo.path(6)
    assert combinatorial_interior(g, [0, 1, 2, 3]) == {0, 1, 2}
    assert combinatorial_interior(g, range(6)) == set(range(6))


def test_lipschitz_constant():
    rho = np.array([[0.0, 1.0, 2.0], [1.0, 0.0, 1.0], [2.0, 1.0, 0.0]])
    assert lipschitz_constant([0.0, 0.5, 2.0], rho) == pytest.approx(1.5)
