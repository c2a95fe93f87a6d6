"""Exact heat kernels, semigroups and sandwiched semigroups on finite graphs.

The Laplacian restricted to the non-Dirichlet vertices is symmetric in
l^2(m); its symmetrization M^{1/2} L M^{-1/2} is diagonalized once and every
kernel, semigroup and derivative is assembled from that decomposition.
Functions are always returned on the full vertex set, zero on the boundary.
"""
from __future__ import annotations

import os
import threading
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import expm
from scipy.sparse.linalg import eigsh, expm_multiply

from .graph import LipschitzWeight, WeightedGraph, lipschitz_constant, sandwiched_matrix
from .report import CheckReport

DENSE_LIMIT = 3000


class SpectralError(RuntimeError):
    pass


class SliceCache:
    """LRU cache of kernel slices bounded by a byte budget."""

    def __init__(self, budget_mb: float | None = None):
        if budget_mb is None:
            budget_mb = float(os.environ.get("HKLAB_CACHE_MB", "256"))
        self.budget = int(budget_mb * 2**20)
        self._data: OrderedDict[float, np.ndarray] = OrderedDict()
        self._bytes = 0
        self._lock = threading.Lock()

    def get(self, t: float):
        with self._lock:
            arr = self._data.get(t)
            if arr is not None:
                self._data.move_to_end(t)
            return arr

    def put(self, t: float, arr: np.ndarray) -> None:
        if arr.nbytes > self.budget:
            return
        with self._lock:
            old = self._data.pop(t, None)
            if old is not None:
                self._bytes -= old.nbytes
            self._data[t] = arr
            self._bytes += arr.nbytes
            while self._bytes > self.budget:
                _, ev = self._data.popitem(last=False)
                self._bytes -= ev.nbytes

    def __len__(self) -> int:
        return len(self._data)


@dataclass(eq=False)
class HeatSystem:
    """Spectral decomposition of the Laplacian on the non-Dirichlet vertices.

    ``phi[:, k]`` is the k-th eigenfunction on the full vertex set,
    orthonormal in l^2(X, m) and zero on the boundary.  In the iterative mode
    (graphs above ``DENSE_LIMIT`` vertices) only ``lam_bottom`` is known and
    kernel columns come from an exponential-action solver.
    """

    graph: WeightedGraph
    eigenvalues: np.ndarray | None
    phi: np.ndarray | None
    lam_bottom: float
    cache: SliceCache = field(default_factory=SliceCache, repr=False)

    @property
    def dense(self) -> bool:
        return self.phi is not None

    @property
    def Lambda(self) -> float:
        return self.lam_bottom

    def coeffs(self, f) -> np.ndarray:
        """Coordinates <f, phi_k>_m."""
        f = np.asarray(f, dtype=float)
        return self.phi.T @ (self.graph.m * f)

    def synth(self, c) -> np.ndarray:
        return self.phi @ c


def build(g: WeightedGraph, dense_limit: int = DENSE_LIMIT) -> HeatSystem:
    inner = g.interior
    sq = np.sqrt(g.m[inner])
    A = (sp.diags(g.deg) - g.b).tocsr()[inner][:, inner]
    if len(inner) <= dense_limit:
        Ls = A.toarray() / sq[:, None] / sq[None, :]
        Ls = 0.5 * (Ls + Ls.T)
        try:
            lam, U = np.linalg.eigh(Ls)
        except np.linalg.LinAlgError as exc:
            cond = np.linalg.cond(Ls)
            raise SpectralError(f"eigensolver failed (condition number {cond:.3e})") from exc
        scale = np.linalg.norm(Ls)
        err = np.linalg.norm(Ls - (U * lam) @ U.T)
        if err > 1e-9 * max(scale, 1.0):
            raise SpectralError(f"reconstruction error {err:.3e} relative to {scale:.3e}")
        lam = np.clip(lam, 0.0, None) if lam[0] > -1e-10 * max(scale, 1.0) else lam
        phi = np.zeros((g.n, len(inner)))
        phi[inner] = U / sq[:, None]
        return HeatSystem(g, lam, phi, float(lam[0]))
    Ls = sp.diags(1 / sq) @ A @ sp.diags(1 / sq)
    lam0 = eigsh(Ls, k=1, sigma=-1e-6, which="LM", return_eigenvectors=False)
    return HeatSystem(g, None, None, float(max(lam0[0], 0.0)))


def _check_time(t: float) -> float:
    t = float(t)
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    return t


def heat_kernel(hs: HeatSystem, t: float) -> np.ndarray:
    """Matrix p_t(x, y) with respect to m."""
    t = _check_time(t)
    cached = hs.cache.get(t)
    if cached is not None:
        return cached
    if hs.dense:
        p = (hs.phi * np.exp(-t * hs.eigenvalues)) @ hs.phi.T
        p = 0.5 * (p + p.T)
    else:
        p = np.column_stack([kernel_column(hs, t, y) for y in range(hs.graph.n)])
    p.setflags(write=False)
    hs.cache.put(t, p)
    return p


def kernel_column(hs: HeatSystem, t: float, y: int, tol: float = 1e-10) -> np.ndarray:
    """p_t(., y) without materializing the full slice."""
    t = _check_time(t)
    g = hs.graph
    if hs.dense:
        return (hs.phi * np.exp(-t * hs.eigenvalues)) @ hs.phi[y]
    out = np.zeros(g.n)
    if y in g.dirichlet:
        return out
    inner = g.interior
    L = g.laplacian_matrix.tocsr()[inner][:, inner]
    e = np.zeros(len(inner))
    e[np.searchsorted(inner, y)] = 1.0 / g.m[y]
    out[inner] = expm_multiply(-t * L, e, traceA=None)
    return out


def semigroup_apply(hs: HeatSystem, t: float, f) -> np.ndarray:
    t = _check_time(t)
    f = np.asarray(f, dtype=float)
    if hs.dense:
        return hs.synth(np.exp(-t * hs.eigenvalues) * hs.coeffs(f))
    g = hs.graph
    inner = g.interior
    L = g.laplacian_matrix.tocsr()[inner][:, inner]
    out = np.zeros(g.n)
    out[inner] = expm_multiply(-t * L, f[inner])
    return out


def semigroup_derivative(hs: HeatSystem, t: float, f, order: int = 1) -> np.ndarray:
    """d^k/dt^k P_t f from the spectral representation."""
    t = _check_time(t)
    lam = hs.eigenvalues
    return hs.synth((-lam) ** order * np.exp(-t * lam) * hs.coeffs(f))


def sandwiched_semigroup(hs: HeatSystem, omega, t: float, f) -> np.ndarray:
    """P_t^omega f = e^omega P_t (e^-omega f)."""
    omega = np.asarray(omega, dtype=float)
    return np.exp(omega) * semigroup_apply(hs, t, np.exp(-omega) * np.asarray(f, dtype=float))


def sandwiched_operator(hs: HeatSystem, omega, t: float) -> np.ndarray:
    """Matrix of P_t^omega on the full vertex set (acting on plain vectors).

    Computed as expm(-t Delta_omega) on the interior block.  Building it from
    the heat kernel instead would scale eigensolver roundoff by e^{osc omega}.
    """
    t = _check_time(t)
    g = hs.graph
    omega = np.asarray(omega, dtype=float)
    inner = g.interior
    e = np.exp(omega[inner] - omega[inner].mean())
    A = (sp.diags(g.deg) - g.b).tocsr()[inner][:, inner].toarray() / g.m[inner][:, None]
    L = e[:, None] * A / e[None, :]
    out = np.zeros((g.n, g.n))
    out[np.ix_(inner, inner)] = expm(-t * L)
    return out


def sandwiched_norm(hs: HeatSystem, omega, t: float) -> float:
    """Operator norm of P_t^omega on l^2(X, m)."""
    s = np.sqrt(hs.graph.m)
    A = s[:, None] * sandwiched_operator(hs, omega, t) / s[None, :]
    return float(np.linalg.norm(A, 2))


def l2_norm(g: WeightedGraph, f) -> float:
    return float(np.sqrt(np.sum(g.m * np.asarray(f, dtype=float) ** 2)))


def generator_residual(hs: HeatSystem, omega, t: float, f, h: float | None = None) -> float:
    """Relative mismatch between a centered difference of P_t^omega f and -Delta_omega P_t^omega f."""
    g = hs.graph
    if h is None:
        h = 1e-5 * max(1.0, t)
    t0 = max(t, h)
    fd = (sandwiched_semigroup(hs, omega, t0 + h, f) - sandwiched_semigroup(hs, omega, t0 - h, f)) / (2 * h)
    u = sandwiched_semigroup(hs, omega, t0, f)
    rhs = -(sandwiched_matrix(g, omega) @ u)
    rhs[list(g.dirichlet)] = 0.0
    return float(np.linalg.norm(fd - rhs) / max(np.linalg.norm(rhs), np.linalg.norm(u), 1e-300))


def gamma_cosh(kappa_S: float, S: float) -> float:
    """2 S^-2 (cosh(kappa S) - 1)."""
    return 4.0 * np.sinh(kappa_S / 2.0) ** 2 / S**2


def phi_curve(hs: HeatSystem, S: float, omega: LipschitzWeight, f, time_grid) -> np.ndarray:
    """exp(2 Lambda t - 2 S^-2 (cosh(kappa S) - 1) t) ||e^omega P_t f||_2^2 along the grid."""
    g = hs.graph
    rate = 2.0 * hs.Lambda - gamma_cosh(omega.lipschitz_constant * S, S)
    w = np.exp(np.asarray(omega.omega, dtype=float))
    out = []
    for t in time_grid:
        u = w * semigroup_apply(hs, t, f)
        out.append(np.exp(rate * t) * np.sum(g.m * u * u))
    return np.array(out)


def phi_monotone(hs: HeatSystem, rho: np.ndarray, S: float, omega: LipschitzWeight, f,
                 time_grid, rtol: float = 1e-9) -> CheckReport:
    """Integrated maximum principle: the weighted norm curve never increases along the grid."""
    grid = np.asarray(time_grid, dtype=float)
    if np.any(np.diff(grid) <= 0):
        raise ValueError("time grid must be increasing")
    actual = lipschitz_constant(omega.omega, rho)
    if actual > omega.lipschitz_constant * (1 + 1e-12) + 1e-12:
        raise ValueError(f"omega is {actual}-Lipschitz, more than the declared {omega.lipschitz_constant}")
    vals = phi_curve(hs, S, omega, f, grid)
    jump = float(np.max(np.diff(vals), initial=0.0))
    return CheckReport.compare("integrated_max_principle", jump, 0.0, rtol * vals[0],
                               instance={"kappa": omega.lipschitz_constant, "grid": [grid[0], grid[-1], grid.size]})


def parse_times(spec: str) -> np.ndarray:
    """Comma list or ``logspace:a:b:n`` (a and b are the endpoint times)."""
    spec = spec.strip()
    if not spec:
        raise ValueError("empty time grid")
    if spec.startswith("logspace:"):
        _, a, b, n = spec.split(":")
        a, b, n = float(a), float(b), int(n)
        if n < 1 or a <= 0 or b <= 0:
            raise ValueError(f"bad logspace spec {spec!r}")
        return np.geomspace(a, b, n)
    vals = np.array([float(x) for x in spec.split(",") if x.strip()])
    if vals.size == 0:
        raise ValueError("empty time grid")
    return vals


def kernel_rows(hs: HeatSystem, times) -> list[tuple[float, str, str, float]]:
    g = hs.graph
    rows = []
    for t in times:
        p = heat_kernel(hs, t)
        for i in range(g.n):
            for j in range(g.n):
                rows.append((float(t), g.ids[i], g.ids[j], float(p[i, j])))
    return rows
