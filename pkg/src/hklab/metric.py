"""Intrinsic metrics, jump size, balls and cut-off functions."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra

from .graph import GraphError, WeightedGraph, combinatorial_interior, gradient_norm
from .report import CheckReport

INTRINSIC_TOL = 1e-12
TRIANGLE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class IntrinsicMetric:
    """Distance matrix together with its jump size and intrinsic slack.

    ``slack[x] = m(x) - sum_y b(x,y) rho(x,y)^2``; the metric is intrinsic
    when every slack is >= -1e-12.
    """

    rho: np.ndarray
    S: float
    slack: np.ndarray

    def dist(self, x: int, y: int) -> float:
        return float(self.rho[x, y])

    def diameter(self) -> float:
        return float(self.rho.max())


def intrinsic_slack(g: WeightedGraph, rho: np.ndarray) -> np.ndarray:
    coo = g.b.tocoo()
    load = np.bincount(coo.row, weights=coo.data * rho[coo.row, coo.col] ** 2, minlength=g.n)
    return g.m - load


def jump_size(g: WeightedGraph, rho: np.ndarray) -> float:
    coo = g.b.tocoo()
    mask = coo.data > 0
    return float(rho[coo.row[mask], coo.col[mask]].max()) if mask.any() else 0.0


def make_metric(g: WeightedGraph, rho: np.ndarray) -> IntrinsicMetric:
    rho = np.asarray(rho, dtype=float)
    if rho.shape != (g.n, g.n):
        raise GraphError(f"distance matrix has shape {rho.shape}")
    if not np.allclose(rho, rho.T, rtol=0, atol=TRIANGLE_TOL):
        raise GraphError("distance matrix is not symmetric")
    S = jump_size(g, rho)
    if not S > 0:
        raise GraphError("jump size must be positive")
    return IntrinsicMetric(rho, S, intrinsic_slack(g, rho))


def edge_lengths(g: WeightedGraph, cap: float = 1.0) -> sp.csr_matrix:
    """Example edge lengths (1/Deg(x) ^ 1/Deg(y))^{1/2} ^ cap on the support of b."""
    coo = g.b.tocoo()
    D = g.Deg
    lens = np.minimum(np.sqrt(np.minimum(1.0 / D[coo.row], 1.0 / D[coo.col])), cap)
    return sp.csr_matrix((lens, (coo.row, coo.col)), shape=(g.n, g.n))


def path_metric(g: WeightedGraph, lengths: sp.csr_matrix) -> np.ndarray:
    rho = dijkstra(lengths, directed=False)
    if np.isinf(rho).any():
        raise GraphError("graph is disconnected")
    np.fill_diagonal(rho, 0.0)
    return rho


def default_intrinsic_metric(g: WeightedGraph, cap: float = 1.0) -> IntrinsicMetric:
    """Path metric of the degree-adapted edge lengths, capped at ``cap``.

    The result is always intrinsic, and its jump size is at most ``cap``.
    """
    if not cap > 0:
        raise ValueError("cap must be positive")
    return make_metric(g, path_metric(g, edge_lengths(g, cap)))


def combinatorial_metric(g: WeightedGraph) -> np.ndarray:
    coo = g.b.tocoo()
    ones = sp.csr_matrix((np.ones_like(coo.data), (coo.row, coo.col)), shape=(g.n, g.n))
    return path_metric(g, ones)


def is_intrinsic(g: WeightedGraph, rho: np.ndarray) -> list[CheckReport]:
    """Per-vertex check of sum_y b(x,y) rho(x,y)^2 <= m(x)."""
    rho = np.asarray(rho, dtype=float)
    slack = intrinsic_slack(g, rho)
    return [
        CheckReport.compare("intrinsic", g.m[i] - slack[i], g.m[i], INTRINSIC_TOL,
                            instance={"vertex": g.ids[i]})
        for i in range(g.n)
    ]


def triangle_violation(rho: np.ndarray) -> float:
    """Largest rho(x,z) - rho(x,y) - rho(y,z) over all triples."""
    worst = -np.inf
    for y in range(rho.shape[0]):
        worst = max(worst, float((rho - rho[:, y][:, None] - rho[y, :][None, :]).max()))
    return worst


def load_metric_csv(g: WeightedGraph, path: str | Path) -> IntrinsicMetric:
    """Read (u, v, rho) triples.

    If every pair is listed the triples are the distance matrix; otherwise
    they are taken as edge lengths and completed by shortest paths.  The
    result must be an intrinsic pseudo-metric.
    """
    n = g.n
    rho = np.full((n, n), np.nan)
    np.fill_diagonal(rho, 0.0)
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].startswith("#") or row[0] == "u":
                continue
            i, j, r = g.idx(row[0]), g.idx(row[1]), float(row[2])
            if r < 0:
                raise GraphError(f"negative distance {r} for {row[0]}-{row[1]}")
            for a, c in ((i, j), (j, i)):
                if not np.isnan(rho[a, c]) and a != c and rho[a, c] != r:
                    raise GraphError(f"conflicting distances for {row[0]}-{row[1]}")
                rho[a, c] = r
    if np.isnan(rho).any():
        known = np.where(np.isnan(rho), 0.0, rho)
        rho = path_metric(g, sp.csr_matrix(known))
    metric = make_metric(g, rho)
    if triangle_violation(metric.rho) > TRIANGLE_TOL:
        raise GraphError("metric violates the triangle inequality")
    if metric.slack.min() < -INTRINSIC_TOL:
        raise GraphError("metric is not intrinsic")
    return metric


def ball(rho: np.ndarray, x: int, R: float) -> np.ndarray:
    """Closed ball {y : rho(x,y) <= R} as sorted indices."""
    return np.flatnonzero(rho[x] <= R)


def ball_interior_inclusion(g: WeightedGraph, metric: IntrinsicMetric, x: int, R: float) -> CheckReport:
    """B(R - S) inside the combinatorial interior of B(R)."""
    inst = {"center": g.ids[x], "R": R}
    if R < metric.S:
        return CheckReport.skipped("ball_interior", "R < S, precondition of the inclusion", inst)
    inner = set(ball(metric.rho, x, R - metric.S).tolist())
    interior = combinatorial_interior(g, ball(metric.rho, x, R).tolist())
    missing = inner - interior
    return CheckReport.compare("ball_interior", len(missing), 0, 0.0, instance=inst,
                               note=f"missing={sorted(g.ids[i] for i in missing)}" if missing else "")


def dist_to_set(rho: np.ndarray, A) -> np.ndarray:
    A = np.asarray(list(A), dtype=int)
    if A.size == 0:
        raise ValueError("A must be nonempty")
    return rho[:, A].min(axis=1)


def cutoff(g: WeightedGraph, rho: np.ndarray, A, R: float, check: bool = True) -> np.ndarray:
    """phi = (1 - rho(., A)/R)_+.

    With ``check`` the gradient bound || |grad phi| ||_inf^2 <= 1/R^2, which
    holds for intrinsic metrics, is verified and a ValueError raised if it
    fails.
    """
    if not R > 0:
        raise ValueError("R must be positive")
    phi = np.clip(1.0 - dist_to_set(rho, A) / R, 0.0, None)
    if check:
        gmax = float(gradient_norm(g, phi).max()) ** 2
        if gmax > (1.0 + 1e-12) / R**2:
            raise ValueError(f"cut-off gradient bound violated: {gmax} > {1 / R**2}")
    return phi
