"""Weighted graphs (b, m) over a finite vertex set and the difference operators on them.

Vertex functions are plain 1-d numpy arrays indexed by the dense vertex index
of the graph.  Vertex identifiers are opaque strings, mapped to indices once at
construction.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Violation:
    kind: str
    where: tuple
    detail: str

    def __str__(self) -> str:
        return f"{self.kind} at {self.where}: {self.detail}"


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """A graph b over (X, m).

    Attributes
    ----------
    ids : tuple of str
        Vertex identifiers; position is the dense index.
    b : scipy.sparse.csr_matrix
        Edge weights.  Graphs built with :meth:`from_edges` are symmetric by
        construction; :meth:`from_matrix` keeps whatever it is given so that
        :func:`validate` can report problems.
    m : ndarray
        Vertex measure.
    dirichlet : frozenset of int
        Indices of vertices on which functions are clamped to zero.
    """

    ids: tuple[str, ...]
    b: sp.csr_matrix
    m: np.ndarray
    dirichlet: frozenset[int] = field(default_factory=frozenset)

    @classmethod
    def from_edges(
        cls,
        ids: Sequence[str],
        edges: Iterable[tuple[str, str, float]],
        m: Sequence[float] | np.ndarray | dict,
        dirichlet: Iterable[str] = (),
    ) -> "WeightedGraph":
        ids = tuple(str(i) for i in ids)
        index = {v: k for k, v in enumerate(ids)}
        if len(index) != len(ids):
            raise GraphError("duplicate vertex identifiers")
        rows, cols, vals = [], [], []
        seen = set()
        for u, v, w in edges:
            iu, iv = index[str(u)], index[str(v)]
            key = (min(iu, iv), max(iu, iv))
            if key in seen:
                raise GraphError(f"duplicate edge {u}-{v}")
            seen.add(key)
            rows += [iu, iv]
            cols += [iv, iu]
            vals += [float(w), float(w)]
        n = len(ids)
        b = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
        if isinstance(m, dict):
            m = [m[i] for i in ids]
        return cls(ids, b, np.asarray(m, dtype=float), frozenset(index[str(d)] for d in dirichlet))

    @classmethod
    def from_matrix(cls, b, m, ids: Sequence[str] | None = None, dirichlet: Iterable[int] = ()):
        b = sp.csr_matrix(b, dtype=float)
        n = b.shape[0]
        ids = tuple(str(i) for i in ids) if ids is not None else tuple(str(i) for i in range(n))
        return cls(ids, b, np.asarray(m, dtype=float), frozenset(int(d) for d in dirichlet))

    @property
    def n(self) -> int:
        return len(self.ids)

    @cached_property
    def index(self) -> dict[str, int]:
        return {v: k for k, v in enumerate(self.ids)}

    def idx(self, x) -> int:
        """Dense index of a vertex given either its identifier or its index."""
        if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
            if not 0 <= x < self.n:
                raise GraphError(f"unknown vertex index {x}")
            return int(x)
        try:
            return self.index[str(x)]
        except KeyError:
            raise GraphError(f"unknown vertex {x!r}") from None

    @cached_property
    def deg(self) -> np.ndarray:
        return np.asarray(self.b.sum(axis=1)).ravel()

    @cached_property
    def Deg(self) -> np.ndarray:
        return self.deg / self.m

    @cached_property
    def interior(self) -> np.ndarray:
        """Indices of vertices not in the Dirichlet boundary."""
        mask = np.ones(self.n, dtype=bool)
        mask[list(self.dirichlet)] = False
        return np.flatnonzero(mask)

    @cached_property
    def edge_list(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Each undirected edge once as (u, v, w) with u < v."""
        coo = sp.triu(self.b, k=1).tocoo()
        return coo.row, coo.col, coo.data

    @cached_property
    def laplacian_matrix(self) -> sp.csr_matrix:
        """Matrix of Delta = M^{-1}(D - B) acting on all vertices."""
        L = sp.diags(self.deg) - self.b
        return sp.csr_matrix(sp.diags(1.0 / self.m) @ L)

    def neighbors(self, x) -> list[tuple[int, float]]:
        i = self.idx(x)
        row = self.b.getrow(i)
        return [(int(j), float(w)) for j, w in zip(row.indices, row.data) if w != 0]

    def with_measure(self, m) -> "WeightedGraph":
        return WeightedGraph(self.ids, self.b, np.asarray(m, dtype=float), self.dirichlet)

    def with_dirichlet(self, dirichlet: Iterable[int]) -> "WeightedGraph":
        return WeightedGraph(self.ids, self.b, self.m, frozenset(int(d) for d in dirichlet))

    def to_json(self) -> dict:
        u, v, w = self.edge_list
        return {
            "vertices": [{"id": i, "m": float(mx)} for i, mx in zip(self.ids, self.m)],
            "edges": [
                {"u": self.ids[a], "v": self.ids[c], "b": float(wt)} for a, c, wt in zip(u, v, w)
            ],
            "dirichlet": [self.ids[d] for d in sorted(self.dirichlet)],
        }


def validate(g: WeightedGraph, atol: float = 0.0) -> list[Violation]:
    """All violated graph invariants; empty iff the graph is valid."""
    out: list[Violation] = []
    b = g.b.tocsr()
    if b.shape != (g.n, g.n):
        return [Violation("shape", (), f"b has shape {b.shape}, expected {(g.n, g.n)}")]
    if g.m.shape != (g.n,):
        return [Violation("shape", (), f"m has shape {g.m.shape}, expected {(g.n,)}")]
    for i in np.flatnonzero(~(g.m > 0)):
        out.append(Violation("measure positivity", (g.ids[i],), f"m = {g.m[i]!r}"))
    coo = b.tocoo()
    for i, j, w in zip(coo.row, coo.col, coo.data):
        if i == j and w != 0:
            out.append(Violation("loop", (g.ids[i], g.ids[j]), f"b(x,x) = {w!r}"))
        if w < 0:
            out.append(Violation("nonnegativity", (g.ids[i], g.ids[j]), f"b = {w!r}"))
    asym = (b - b.T).tocoo()
    for i, j, w in zip(asym.row, asym.col, asym.data):
        if i < j and abs(w) > atol:
            out.append(
                Violation(
                    "symmetry",
                    (g.ids[i], g.ids[j]),
                    f"b(x,y) = {b[i, j]!r} but b(y,x) = {b[j, i]!r}",
                )
            )
    if g.n > 0:
        support = sp.csr_matrix(((np.abs(b.data) > 0).astype(float), b.indices, b.indptr), shape=b.shape)
        ncomp, _ = connected_components(support + support.T, directed=False)
        if ncomp != 1:
            out.append(Violation("connectivity", (), f"{ncomp} connected components"))
    for d in g.dirichlet:
        if not 0 <= d < g.n:
            out.append(Violation("dirichlet", (d,), "boundary index out of range"))
    return out


def ensure_valid(g: WeightedGraph) -> WeightedGraph:
    errs = validate(g)
    if errs:
        raise GraphError("; ".join(str(e) for e in errs))
    return g


def load_graph(path: str | Path) -> WeightedGraph:
    """Read the JSON graph format, rejecting duplicate edges and nonpositive weights."""
    data = json.loads(Path(path).read_text())
    return graph_from_json(data)


def graph_from_json(data: dict) -> WeightedGraph:
    verts = data["vertices"]
    ids = [str(v["id"]) for v in verts]
    m = [float(v["m"]) for v in verts]
    for i, mx in zip(ids, m):
        if not mx > 0:
            raise GraphError(f"nonpositive measure at {i}: {mx}")
    edges = []
    for e in data.get("edges", []):
        w = float(e["b"])
        if not w > 0:
            raise GraphError(f"nonpositive weight on edge {e['u']}-{e['v']}: {w}")
        if str(e["u"]) == str(e["v"]):
            raise GraphError(f"loop at {e['u']}")
        edges.append((e["u"], e["v"], w))
    g = WeightedGraph.from_edges(ids, edges, m, data.get("dirichlet", []))
    return ensure_valid(g)


def save_graph(g: WeightedGraph, path: str | Path) -> None:
    Path(path).write_text(json.dumps(g.to_json(), indent=1))


def deg(g: WeightedGraph, x) -> float:
    return float(g.deg[g.idx(x)])


def Deg(g: WeightedGraph, x) -> float:
    i = g.idx(x)
    return float(g.deg[i] / g.m[i])


def _zero_boundary(g: WeightedGraph, f) -> np.ndarray:
    f = np.array(f, dtype=float)
    if g.dirichlet:
        f[list(g.dirichlet)] = 0.0
    return f


def laplacian_apply(g: WeightedGraph, f, dirichlet: bool = True) -> np.ndarray:
    """Delta f(x) = (1/m(x)) sum_y b(x,y)(f(x) - f(y)).

    With ``dirichlet`` set, ``f`` is first clamped to zero on the boundary.
    """
    if dirichlet:
        f = _zero_boundary(g, f)
    return g.laplacian_matrix @ np.asarray(f, dtype=float)


def gradient_norm(g: WeightedGraph, f, x=None):
    """|grad f|(x); all vertices at once when ``x`` is None."""
    f = np.asarray(f, dtype=float)
    coo = g.b.tocoo()
    sq = coo.data * (f[coo.row] - f[coo.col]) ** 2
    tot = np.bincount(coo.row, weights=sq, minlength=g.n)
    val = np.sqrt(tot / g.m)
    return val if x is None else float(val[g.idx(x)])


def energy(g: WeightedGraph, f) -> float:
    """|| |grad f| ||_2^2 = sum_{x,y} b(x,y)(f(x)-f(y))^2."""
    f = np.asarray(f, dtype=float)
    coo = g.b.tocoo()
    return float(np.sum(coo.data * (f[coo.row] - f[coo.col]) ** 2))


def combinatorial_interior(g: WeightedGraph, A: Iterable) -> set[int]:
    """A° = {x in A : b(x,y) = 0 for all y outside A}, as dense indices."""
    inA = np.zeros(g.n, dtype=bool)
    idx = [g.idx(a) for a in A]
    inA[idx] = True
    coo = g.b.tocoo()
    leaks = inA[coo.row] & ~inA[coo.col] & (coo.data != 0)
    bad = set(coo.row[leaks].tolist())
    return {i for i in idx if i not in bad}


def sandwiched_apply(g: WeightedGraph, omega, v, dirichlet: bool = True) -> np.ndarray:
    """Delta_omega v = e^omega Delta(e^-omega v)."""
    omega = np.asarray(omega, dtype=float)
    return np.exp(omega) * laplacian_apply(g, np.exp(-omega) * np.asarray(v, dtype=float), dirichlet)


def sandwiched_matrix(g: WeightedGraph, omega) -> sp.csr_matrix:
    e = np.exp(np.asarray(omega, dtype=float))
    return sp.csr_matrix(sp.diags(e) @ g.laplacian_matrix @ sp.diags(1.0 / e))


def cosh_increment(d) -> np.ndarray:
    """|grad e^w grad e^-w| for an increment d of w, i.e. 2(cosh d - 1) = 4 sinh^2(d/2)."""
    return 4.0 * np.sinh(np.asarray(d, dtype=float) / 2.0) ** 2


def h_omega(g: WeightedGraph, omega) -> float:
    omega = np.asarray(omega, dtype=float)
    coo = g.b.tocoo()
    terms = coo.data * cosh_increment(omega[coo.row] - omega[coo.col])
    tot = np.bincount(coo.row, weights=terms, minlength=g.n) / g.m
    return float(tot.max()) if g.n else 0.0


@dataclass(frozen=True)
class LipschitzWeight:
    omega: np.ndarray
    lipschitz_constant: float

    def check(self, rho: np.ndarray, rtol: float = 1e-12) -> bool:
        return lipschitz_constant(self.omega, rho) <= self.lipschitz_constant * (1 + rtol) + rtol


def lipschitz_constant(omega, rho: np.ndarray) -> float:
    """Smallest kappa with |w(x) - w(y)| <= kappa rho(x,y), by exhaustive pair scan."""
    omega = np.asarray(omega, dtype=float)
    diff = np.abs(omega[:, None] - omega[None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rho > 0, diff / np.where(rho > 0, rho, 1.0), np.where(diff > 0, np.inf, 0.0))
    return float(ratio.max()) if ratio.size else 0.0
