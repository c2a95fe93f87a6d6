import numpy as np
import pytest

from hklab import semigroup as sg
from hklab import zoo
from hklab.graph import validate


def test_cycle_counting():
    g = zoo.cycle(5)
    assert g.n == 5 and np.all(g.deg == 2)


def test_normalizing_measure_has_unit_Deg():
    for g in (zoo.cycle(9, "normalizing"), zoo.lattice_box(3, 5, "normalizing"),
              zoo.antitree(1.2, 8, "normalizing"), zoo.random_weighted(10, seed=1, measure="normalizing")):
        assert np.allclose(g.Deg, 1.0)


def test_antitree_spheres():
    g = zoo.antitree(1.0, 4)
    sizes = [sum(zoo.sphere_of(v) == k for v in g.ids) for k in range(4)]
    assert sizes == [1, 1, 2, 3]
    # complete bipartite joins only
    for i in range(g.n):
        for j in range(g.n):
            ki, kj = zoo.sphere_of(g.ids[i]), zoo.sphere_of(g.ids[j])
            assert (g.b[i, j] == 1) == (abs(ki - kj) == 1)


def test_antitree_degrees():
    K = 12
    g = zoo.antitree(1.5, K)
    s = zoo.sphere_sizes(1.5, K)
    for i, v in enumerate(g.ids):
        k = zoo.sphere_of(v)
        want = (s[k - 1] if k > 0 else 0) + (s[k + 1] if k + 1 < K else 0)
        assert g.deg[i] == want


def test_antitree_dimension():
    assert zoo.antitree_dimension(1.0) == 4.0


@pytest.mark.parametrize("gamma", [0.0, 2.0, -1.0])
def test_antitree_gamma_range(gamma):
    with pytest.raises(ValueError):
        zoo.antitree(gamma, 5)


def test_antitree_truncation_flags_outer_sphere():
    g = zoo.antitree(1.0, 6, truncation=True)
    outer = {i for i, v in enumerate(g.ids) if zoo.sphere_of(v) == 5}
    assert set(g.dirichlet) == outer
    assert validate(g) == []


def test_dirichlet_path_has_positive_bottom():
    g = zoo.path(300, "normalizing", dirichlet_ends=True)
    assert sg.build(g).Lambda > 0


def test_random_weighted_reproducible():
    a, b = zoo.random_weighted(15, seed=7), zoo.random_weighted(15, seed=7)
    assert abs(a.b - b.b).max() == 0 and np.array_equal(a.m, b.m)
    c = zoo.random_weighted(15, seed=8)
    assert abs(a.b - c.b).max() > 0


def test_generate_spec():
    g = zoo.generate({"family": "lattice_box", "size": {"w": 3, "h": 2}, "measure": "normalizing"})
    assert g.n == 6
    with pytest.raises(ValueError):
        zoo.generate({"family": "torus", "size": {}})
