import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hklab import metric as mt
from hklab import zoo
from hklab.graph import GraphError, gradient_norm


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(3, 14))
def test_default_metric_intrinsic_and_triangle(seed, n):
    g = zoo.random_weighted(n, edge_prob=0.4, seed=seed)
    met = mt.default_intrinsic_metric(g)
    assert met.slack.min() >= -1e-12
    assert all(r.ok for r in mt.is_intrinsic(g, met.rho))
    assert mt.triangle_violation(met.rho) <= 1e-12
    assert 0 < met.S <= 1.0


def test_normalized_cycle_is_combinatorial():
    g = zoo.cycle(30, measure="normalizing")
    met = mt.default_intrinsic_metric(g)
    assert met.S == 1.0
    assert np.array_equal(met.rho, mt.combinatorial_metric(g))


def test_counting_cycle_metric():
    # Deg = 2 everywhere, so every edge has length 1/sqrt(2)
    met = mt.default_intrinsic_metric(zoo.cycle(8))
    assert met.S == pytest.approx(2**-0.5)
    assert met.rho[0, 4] == pytest.approx(4 * 2**-0.5)


def test_cap_bounds_jump_size():
    g = zoo.path(5, measure="normalizing")
    met = mt.default_intrinsic_metric(g, cap=0.25)
    assert met.S == 0.25


def test_ball_and_interior_inclusion():
    g = zoo.cycle(40, measure="normalizing")
    met = mt.default_intrinsic_metric(g)
    assert list(mt.ball(met.rho, 0, 2)) == [0, 1, 2, 38, 39]
    for R in (1.0, 3.0, 7.5):
        assert mt.ball_interior_inclusion(g, met, 0, R).ok
    assert mt.ball_interior_inclusion(g, met, 0, 0.5).status == "skipped"


def test_cutoff_gradient_bound(small_graphs):
    for g in small_graphs:
        rho = mt.default_intrinsic_metric(g).rho
        phi = mt.cutoff(g, rho, [0], 1.5)
        assert phi[0] == 1.0 and phi.min() >= 0
        assert gradient_norm(g, phi).max() ** 2 <= 1 / 1.5**2 * (1 + 1e-12)


def test_metric_csv(tmp_path):
    g = zoo.path(4, measure="normalizing")
    p = tmp_path / "m.csv"
    p.write_text("u,v,rho\n0,1,0.5\n1,2,0.5\n2,3,0.5\n")
    met = mt.load_metric_csv(g, p)
    assert met.rho[0, 3] == pytest.approx(1.5)
    p.write_text("u,v,rho\n0,1,2\n1,2,2\n2,3,2\n")
    with pytest.raises(GraphError):
        mt.load_metric_csv(g, p)
