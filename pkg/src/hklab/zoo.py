"""Graph generators: antitrees and standard test geometries."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .graph import GraphError, WeightedGraph, ensure_valid, validate

MEASURES = ("counting", "normalizing", "custom")


def _measure(ids, edges, measure, custom=None):
    if measure == "counting":
        return np.ones(len(ids))
    deg = dict.fromkeys(ids, 0.0)
    for u, v, w in edges:
        deg[u] += w
        deg[v] += w
    if measure == "normalizing":
        return np.array([deg[i] for i in ids])
    if measure == "custom":
        if custom is None:
            raise ValueError("custom measure needs values")
        return np.asarray(custom, dtype=float)
    raise ValueError(f"unknown measure {measure!r}")


def _build(ids, edges, measure, dirichlet=(), custom=None):
    g = WeightedGraph.from_edges(ids, edges, _measure(ids, edges, measure, custom), dirichlet)
    return ensure_valid(g)


def path(n: int, measure: str = "counting", dirichlet_ends: bool = False, custom=None) -> WeightedGraph:
    if n < 2:
        raise ValueError("path needs n >= 2")
    ids = [str(i) for i in range(n)]
    edges = [(ids[i], ids[i + 1], 1.0) for i in range(n - 1)]
    return _build(ids, edges, measure, [ids[0], ids[-1]] if dirichlet_ends else (), custom)


def cycle(n: int, measure: str = "counting", custom=None) -> WeightedGraph:
    if n < 3:
        raise ValueError("cycle needs n >= 3")
    ids = [str(i) for i in range(n)]
    edges = [(ids[i], ids[(i + 1) % n], 1.0) for i in range(n)]
    return _build(ids, edges, measure, (), custom)


def lattice_box(w: int, h: int, measure: str = "counting", dirichlet_frame: bool = False,
                custom=None) -> WeightedGraph:
    if w < 2 or h < 2:
        raise ValueError("lattice box needs w, h >= 2")
    ids = [f"{i},{j}" for j in range(h) for i in range(w)]
    edges = []
    for j in range(h):
        for i in range(w):
            if i + 1 < w:
                edges.append((f"{i},{j}", f"{i + 1},{j}", 1.0))
            if j + 1 < h:
                edges.append((f"{i},{j}", f"{i},{j + 1}", 1.0))
    frame = [f"{i},{j}" for j in range(h) for i in range(w) if i in (0, w - 1) or j in (0, h - 1)]
    return _build(ids, edges, measure, frame if dirichlet_frame else (), custom)


def complete(n: int, measure: str = "counting", custom=None) -> WeightedGraph:
    if n < 2:
        raise ValueError("complete graph needs n >= 2")
    ids = [str(i) for i in range(n)]
    edges = [(ids[i], ids[j], 1.0) for i in range(n) for j in range(i + 1, n)]
    return _build(ids, edges, measure, (), custom)


def random_weighted(n: int, edge_prob: float = 0.3, weight_dist: str = "uniform",
                    seed: int = 0, measure: str = "random", retries: int = 100) -> WeightedGraph:
    """Erdos-Renyi support with random weights; regenerated until connected.

    ``weight_dist`` is ``uniform`` (on [0.1, 2]), ``exponential`` or
    ``lognormal``.  ``measure`` may additionally be ``random`` (uniform on
    [0.2, 3]).
    """
    if n < 2:
        raise ValueError("random graph needs n >= 2")
    if not 0 < edge_prob <= 1:
        raise ValueError("edge_prob must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    ids = [str(i) for i in range(n)]
    for _ in range(retries):
        mask = np.triu(rng.random((n, n)) < edge_prob, k=1)
        iu, ju = np.nonzero(mask)
        if weight_dist == "uniform":
            w = rng.uniform(0.1, 2.0, size=iu.size)
        elif weight_dist == "exponential":
            w = rng.exponential(1.0, size=iu.size) + 1e-3
        elif weight_dist == "lognormal":
            w = rng.lognormal(0.0, 1.0, size=iu.size)
        else:
            raise ValueError(f"unknown weight distribution {weight_dist!r}")
        edges = [(ids[a], ids[c], float(x)) for a, c, x in zip(iu, ju, w)]
        if measure == "random":
            m = rng.uniform(0.2, 3.0, size=n)
            g = WeightedGraph.from_edges(ids, edges, m)
        else:
            g = WeightedGraph.from_edges(ids, edges, _measure(ids, edges, measure))
        if not validate(g):
            return g
    raise GraphError(f"no connected draw after {retries} retries")


def sphere_sizes(gamma: float, K: int) -> list[int]:
    """s_0 = 1 (the root), s_k = floor(k^gamma)."""
    sizes = [1] + [int(math.floor(k**gamma + 1e-12)) for k in range(1, K)]
    if min(sizes) < 1:
        raise ValueError("every sphere must be nonempty")
    return sizes


def antitree(gamma: float, K: int, measure: str = "counting", truncation: bool = False) -> WeightedGraph:
    """Antitree with K spheres of sizes floor(k^gamma) joined by complete bipartite graphs.

    With ``truncation`` the outermost sphere is kept and flagged Dirichlet.
    Vertex ids are ``"k:i"`` (sphere k, position i).
    """
    if not 0 < gamma < 2:
        raise ValueError("gamma must lie in (0, 2)")
    if K < 2:
        raise ValueError("antitree needs K >= 2 spheres")
    sizes = sphere_sizes(gamma, K)
    spheres = [[f"{k}:{i}" for i in range(s)] for k, s in enumerate(sizes)]
    ids = [v for s in spheres for v in s]
    edges = [(u, v, 1.0) for k in range(K - 1) for u in spheres[k] for v in spheres[k + 1]]
    return _build(ids, edges, measure, spheres[-1] if truncation else ())


def antitree_dimension(gamma: float) -> float:
    return 2 * (gamma + 1) / (2 - gamma)


def sphere_of(vertex_id: str) -> int:
    return int(vertex_id.split(":")[0])


@dataclass
class GeneratorSpec:
    family: str
    size: dict = field(default_factory=dict)
    measure: str = "counting"
    truncation: bool = False
    seed: int = 0

    def to_json(self) -> dict:
        return asdict(self)


def generate(spec: GeneratorSpec | dict) -> WeightedGraph:
    if isinstance(spec, dict):
        spec = GeneratorSpec(**spec)
    s = spec.size
    f = spec.family
    if f == "path":
        return path(int(s["n"]), spec.measure, dirichlet_ends=spec.truncation)
    if f == "cycle":
        return cycle(int(s["n"]), spec.measure)
    if f == "lattice_box":
        return lattice_box(int(s["w"]), int(s["h"]), spec.measure, dirichlet_frame=spec.truncation)
    if f == "complete":
        return complete(int(s["n"]), spec.measure)
    if f == "antitree":
        return antitree(float(s["gamma"]), int(s["K"]), spec.measure, spec.truncation)
    if f == "random_weighted":
        return random_weighted(int(s["n"]), float(s.get("edge_prob", 0.3)),
                               s.get("weight_dist", "uniform"), spec.seed,
                               measure=spec.measure)
    raise ValueError(f"unknown family {f!r}")
