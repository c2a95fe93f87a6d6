import numpy as np
import pytest

from hklab import metric as mt
from hklab import semigroup as sg
from hklab import zoo
from hklab.graph import WeightedGraph


@pytest.fixture(scope="session")
def two_vertex():
    return WeightedGraph.from_edges(["a", "b"], [("a", "b", 1.0)], [1.0, 1.0])


@pytest.fixture(scope="session")
def c300():
    g = zoo.cycle(300, measure="normalizing")
    met = mt.default_intrinsic_metric(g)
    return g, sg.build(g), met.rho, met.S


@pytest.fixture(scope="session")
def small_graphs():
    return [
        zoo.cycle(7),
        zoo.path(6, measure="normalizing"),
        zoo.lattice_box(3, 4),
        zoo.complete(5),
        zoo.random_weighted(9, edge_prob=0.5, seed=3),
        zoo.antitree(1.0, 5),
    ]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
