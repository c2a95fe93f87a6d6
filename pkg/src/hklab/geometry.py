"""Geometric functionals of balls: volumes, degree/measure means, doubling and Sobolev constants."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize

from .graph import WeightedGraph, combinatorial_interior
from .metric import ball, cutoff

log = logging.getLogger(__name__)


def holder_conjugate(p: float) -> float:
    if p == math.inf:
        return 1.0
    if not p > 1:
        raise ValueError(f"p must lie in (1, inf], got {p}")
    return p / (p - 1.0)


def parse_p(p) -> float:
    if isinstance(p, str):
        if p.strip().lower() in ("inf", "infinity", "∞"):
            return math.inf
        p = float(p)
    return float(p)


@dataclass(frozen=True)
class Params:
    """Dimension parameters n > 2, d > 0 and integrability p in (1, inf]."""

    n: float
    d: float
    p: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "p", parse_p(self.p))
        if not self.n > 2:
            raise ValueError(f"n must exceed 2, got {self.n}")
        if not self.d > 0:
            raise ValueError(f"d must be positive, got {self.d}")
        holder_conjugate(self.p)

    @property
    def q(self) -> float:
        return holder_conjugate(self.p)

    @property
    def alpha(self) -> float:
        return 1.0 + 2.0 / self.n

    @property
    def beta(self) -> float:
        return 1.0 + 1.0 / max(self.n, 2.0 * self.q)


def ball_volume(g: WeightedGraph, rho: np.ndarray, x: int, R: float) -> float:
    return float(g.m[ball(rho, x, R)].sum())


def D_p(g: WeightedGraph, rho: np.ndarray, x: int, R: float, p: float) -> float:
    """m-weighted p-mean of Deg over B_x(R); the supremum when p is infinite."""
    B = ball(rho, x, R)
    vals = g.Deg[B]
    if p == math.inf:
        return float(vals.max())
    w = g.m[B]
    return float((np.sum(w * vals**p) / w.sum()) ** (1.0 / p))


def M_p(g: WeightedGraph, rho: np.ndarray, x: int, R: float, p: float) -> float:
    """m-weighted p-mean of 1/m over B_x(R); the supremum when p is infinite."""
    B = ball(rho, x, R)
    w = g.m[B]
    if p == math.inf:
        return float((1.0 / w).max())
    return float((np.sum(w * w ** (-p)) / w.sum()) ** (1.0 / p))


def mu(g: WeightedGraph, rho: np.ndarray, x: int, R: float, d: float, q: float) -> float:
    if not R > 0:
        raise ValueError("mu needs R > 0")
    return max(1.0, (ball_volume(g, rho, x, R) / R**d) ** q)


def kappa_theta(r: float, S: float, beta: float) -> tuple[int, float]:
    """kappa(r) = floor(sqrt(r/4S) - 2) clamped at 0, theta(r) = 1/(2 beta^kappa)."""
    if not S > 0 or not beta > 1:
        raise ValueError("need S > 0 and beta > 1")
    raw = math.floor(math.sqrt(max(r, 0.0) / (4.0 * S)) - 2.0 + 1e-12)
    if raw < 0:
        log.debug("kappa clamped to 0 at r=%g (raw %d)", r, raw)
    k = max(raw, 0)
    return k, 0.5 * beta ** (-k)


def theta_rate(beta: float, S: float) -> float:
    """Exponent in theta(r) ~ exp(-rate sqrt r): ln(beta)/sqrt(4S)."""
    return math.log(beta) / math.sqrt(4.0 * S)


def K_iterations(R: float, S: float) -> int:
    if R < 32 * S * (1 - 1e-12):
        raise ValueError(f"space-time iteration needs R >= 32S (R={R}, S={S})")
    return max(0, math.floor(math.sqrt(R / (8.0 * S)) - 2.0 + 1e-12))


def R0(S: float, n: float, q: float) -> float:
    a = 1.0 + 2.0 / n
    b = 1.0 + 1.0 / max(n, 2.0 * q)
    return 8.0 * S * (math.log(q) / math.log(a / b) + 3.0) ** 2


def log_gamma_error(g: WeightedGraph, rho: np.ndarray, x: int, r: float, params: Params, S: float) -> float:
    """ln Gamma_x(r) = theta(r) [ln(1 + r^2 D_p) + q ln M_p + q ln m(B(r))]."""
    if not r > 0:
        raise ValueError("Gamma needs r > 0")
    q = params.q
    _, th = kappa_theta(r, S, params.beta)
    base = (math.log1p(r * r * D_p(g, rho, x, r, params.p))
            + q * math.log(M_p(g, rho, x, r, params.p))
            + q * math.log(ball_volume(g, rho, x, r)))
    return th * base


def gamma_error(g, rho, x, r, params: Params, S: float) -> float:
    return math.exp(log_gamma_error(g, rho, x, r, params, S))


def log_normalized_gamma_bound(R: float, C_S: float, params: Params, S: float = 1.0) -> float:
    """ln of [(1+R^2)(C_S^{n/2}(2R^2+1)^{n/2})^q]^{theta(R)}, the Gamma bound for m = deg."""
    n, q = params.n, params.q
    _, th = kappa_theta(R, S, params.beta)
    return th * (math.log1p(R * R) + q * (n / 2) * (math.log(C_S) + math.log(2 * R * R + 1)))


@dataclass
class GeometryProfile:
    center: int
    params: Params
    S: float
    radii: np.ndarray
    volume: np.ndarray
    Dp: np.ndarray
    Mp: np.ndarray
    mu: np.ndarray
    theta: np.ndarray
    kappa: np.ndarray
    Gamma: np.ndarray

    @property
    def q(self):
        return self.params.q

    @property
    def alpha(self):
        return self.params.alpha

    @property
    def beta(self):
        return self.params.beta

    @property
    def gamma(self):
        return theta_rate(self.params.beta, self.S)

    COLUMNS = ["R", "volume", "D_p", "M_p", "mu", "theta", "kappa", "Gamma"]

    def rows(self):
        for i, R in enumerate(self.radii):
            yield {"R": float(R), "volume": float(self.volume[i]), "D_p": float(self.Dp[i]),
                   "M_p": float(self.Mp[i]), "mu": float(self.mu[i]), "theta": float(self.theta[i]),
                   "kappa": int(self.kappa[i]), "Gamma": float(self.Gamma[i])}


def realized_radii(rho: np.ndarray, x: int, R1: float = 0.0, R2: float = math.inf) -> np.ndarray:
    d = np.unique(rho[x])
    return d[(d >= R1) & (d <= R2)]


def volume_slope(g: WeightedGraph, rho: np.ndarray, x: int, decades: float = 1.0) -> tuple[float, float, float]:
    """Least-squares slope of ln m(B(x, r)) against ln r over the top ``decades`` of realized radii.

    Returns (slope, r_lo, r_hi).
    """
    radii = realized_radii(rho, x)
    r_hi = float(radii.max())
    r_lo = r_hi / 10.0**decades
    sel = radii[(radii >= r_lo * (1 - 1e-12)) & (radii > 0)]
    if sel.size < 2:
        raise ValueError("fewer than two realized radii in the fitting window")
    vol = np.array([ball_volume(g, rho, x, R) for R in sel])
    slope = float(np.polyfit(np.log(sel), np.log(vol), 1)[0])
    return slope, float(sel.min()), r_hi


def profile(g: WeightedGraph, rho: np.ndarray, x: int, params: Params, S: float, radii=None) -> GeometryProfile:
    if radii is None:
        radii = realized_radii(rho, x)
        radii = radii[radii > 0]
    radii = np.asarray(radii, dtype=float)
    vol, dp, mp, mus, th, ka, gam = ([] for _ in range(7))
    for R in radii:
        vol.append(ball_volume(g, rho, x, R))
        dp.append(D_p(g, rho, x, R, params.p))
        mp.append(M_p(g, rho, x, R, params.p))
        mus.append(mu(g, rho, x, R, params.d, params.q) if R > 0 else math.nan)
        k, t = kappa_theta(R, S, params.beta)
        ka.append(k)
        th.append(t)
        gam.append(gamma_error(g, rho, x, R, params, S) if R > 0 else math.nan)
    return GeometryProfile(x, params, S, radii, *map(np.asarray, (vol, dp, mp, mus, th, ka, gam)))


# --- volume doubling -------------------------------------------------------

def _volume_steps(g, rho, x, R1, R2):
    """Breakpoints b_0 = R1 < b_1 < ... of r -> m(B(r)) on [R1, R2] with the volume on each step."""
    order = np.argsort(rho[x])
    dists = rho[x][order]
    cum = np.cumsum(g.m[order])
    inner = np.unique(dists[(dists > R1) & (dists <= R2)])
    bps = np.concatenate([[R1], inner])
    vols = cum[np.searchsorted(dists, bps, side="right") - 1]
    return bps, vols


def doubling_constant(g: WeightedGraph, rho: np.ndarray, x: int, R1: float, R2: float, d: float):
    """Smallest C_D with m(B(r2)) <= C_D (r2/r1)^d m(B(r1)) for R1 <= r1 <= r2 <= R2.

    Returns ``(C_D, (r1, r2))``; ``r1`` may be a left limit at a breakpoint,
    reported as the breakpoint itself.
    """
    if not 0 < R1 <= R2:
        raise ValueError("need 0 < R1 <= R2")
    bps, vols = _volume_steps(g, rho, x, R1, R2)
    right = np.append(bps[1:], R2)
    best, arg = 1.0, (R1, R1)
    # r1 -> right end of step i, r2 = left end of step j > i
    score_r1 = right**d / vols
    run_best, run_arg = -np.inf, None
    for j in range(1, len(bps)):
        if score_r1[j - 1] > run_best:
            run_best, run_arg = score_r1[j - 1], j - 1
        val = vols[j] / bps[j] ** d * run_best
        if val > best:
            best, arg = float(val), (float(right[run_arg]), float(bps[j]))
    return best, arg


def doubling_star_constant(g: WeightedGraph, rho: np.ndarray, x: int, R1: float, R2: float) -> float:
    """sup over r in [R1, R2] of m(B(2r)) / m(B(r))."""
    d = np.unique(rho[x])
    cand = [R1, R2] + [b / 2 for b in d if R1 <= b / 2 <= R2]
    cand += [np.nextafter(b, -np.inf) for b in d if R1 < b <= R2]
    order = np.argsort(rho[x])
    dists = rho[x][order]
    cum = np.cumsum(g.m[order])

    def V(r):
        return cum[np.searchsorted(dists, r, side="right") - 1]

    return float(max(V(2 * r) / V(r) for r in cand))


# --- Sobolev constant ------------------------------------------------------

@dataclass
class SobolevEstimate:
    R: float
    C_S: float
    certificate: np.ndarray
    converged: bool
    starts: int
    support: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))


class _SobolevProblem:
    def __init__(self, g: WeightedGraph, rho: np.ndarray, x: int, R: float, n: float):
        if not n > 2:
            raise ValueError("Sobolev inequality needs n > 2")
        if not R > 0:
            raise ValueError("Sobolev inequality needs R > 0")
        B = ball(rho, x, R)
        I = np.array(sorted(combinatorial_interior(g, B.tolist())), dtype=int)
        if I.size == 0:
            raise ValueError(f"combinatorial interior of B({R}) is empty")
        self.I = I
        self.R = R
        self.s = 2.0 * n / (n - 2.0)
        self.m = g.m[I]
        lap = (sp.diags(g.deg) - g.b).tocsr()[I][:, I]
        self.Q = (2.0 * lap + sp.diags(self.m / R**2)).tocsr()
        self.log_pref = (2.0 / n) * math.log(g.m[B].sum()) - 2.0 * math.log(R)

    def log_ratio(self, u: np.ndarray) -> float:
        u = np.abs(u)
        num = np.sum(self.m * u**self.s)
        den = float(u @ (self.Q @ u))
        if num <= 0 or den <= 0:
            return -math.inf
        return self.log_pref + (2.0 / self.s) * math.log(num) - math.log(den)

    def neg_and_grad(self, u: np.ndarray):
        num = np.sum(self.m * u**self.s)
        Qu = self.Q @ u
        den = float(u @ Qu)
        val = self.log_pref + (2.0 / self.s) * math.log(num) - math.log(den)
        grad = 2.0 * self.m * u ** (self.s - 1) / num - 2.0 * Qu / den
        return -val, -grad

    def projected_grad_norm(self, u: np.ndarray) -> float:
        u = u / np.linalg.norm(u)
        _, gneg = self.neg_and_grad(u)
        pg = np.where((u > 0) | (gneg < 0), gneg, 0.0)
        # relative to the size of either gradient term, which balance at a critical point
        scale = 2.0 * np.linalg.norm(self.m * u ** (self.s - 1)) / np.sum(self.m * u**self.s)
        return float(np.linalg.norm(pg) / scale)


def sobolev_ratio(g: WeightedGraph, rho: np.ndarray, x: int, R: float, n: float, u) -> float:
    """(m(B)^{2/n}/R^2)||u||_{2n/(n-2)}^2 / (|| |grad u| ||^2 + R^-2 ||u||^2) for u supported in B(R)°.

    ``u`` is given on the full vertex set; mass outside the interior raises.
    """
    prob = _SobolevProblem(g, rho, x, R, n)
    u = np.asarray(u, dtype=float)
    outside = np.setdiff1d(np.arange(g.n), prob.I)
    if np.any(u[outside] != 0):
        raise ValueError("test function not supported in the combinatorial interior")
    return math.exp(prob.log_ratio(u[prob.I]))


def sobolev_constant(g: WeightedGraph, rho: np.ndarray, x: int, R: float, n: float,
                     budget: int = 4, seed: int = 0, warm: np.ndarray | None = None,
                     gtol: float = 1e-4) -> SobolevEstimate:
    """Certified lower bound for the best Sobolev constant on B_x(R).

    Maximizes the Sobolev ratio over nonnegative u supported in B(R)° by
    projected quasi-Newton ascent (L-BFGS-B with u >= 0) from ``budget``
    random starts plus deterministic ones (a cut-off around x and ``warm``).
    Vertex indicators are scanned in closed form.  The returned certificate
    reproduces ``C_S``.
    """
    prob = _SobolevProblem(g, rho, x, R, n)
    k = prob.I.size
    best_val, best_u = -math.inf, None

    # vertex indicators: ratio = pref * m(y)^{2/s} / (2 deg(y) + m(y)/R^2)
    diag = prob.Q.diagonal()
    ind = prob.log_pref + (2.0 / prob.s) * np.log(prob.m) - np.log(diag)
    j = int(np.argmax(ind))
    best_val = float(ind[j])
    best_u = np.zeros(k)
    best_u[j] = 1.0

    rng = np.random.default_rng(seed)
    starts = []
    pos = np.searchsorted(prob.I, x)
    if pos < k and prob.I[pos] == x:
        starts.append(np.clip(1.0 - rho[x, prob.I] / max(R, 1e-12), 0.05, None))
    if warm is not None:
        w = np.asarray(warm, dtype=float)[prob.I]
        if np.any(w > 0):
            starts.append(np.clip(w, 0.0, None) + 1e-3 * w.max())
    starts.append(np.ones(k))
    for _ in range(budget):
        starts.append(rng.random(k) + 1e-3)

    for u0 in starts:
        u0 = u0 / np.linalg.norm(u0)
        res = minimize(prob.neg_and_grad, u0, jac=True, method="L-BFGS-B",
                       bounds=[(0.0, None)] * k,
                       options={"maxiter": 5000, "ftol": 1e-15, "gtol": 1e-12, "maxcor": 20})
        u = np.clip(res.x, 0.0, None)
        if not np.any(u > 0):
            continue
        u = u / np.linalg.norm(u)
        val = prob.log_ratio(u)
        if val > best_val:
            best_val, best_u = val, u
    # stationarity of the certificate itself; a lone vertex indicator is not checked
    converged = bool(prob.projected_grad_norm(best_u) < gtol)
    cert = np.zeros(g.n)
    cert[prob.I] = best_u
    C = sobolev_ratio(g, rho, x, R, n, cert)
    return SobolevEstimate(R, C, cert, converged, len(starts), prob.I)


@dataclass
class SVEstimate:
    """Certified constants on an interval of radii with pass flags against targets."""

    center: int
    R1: float
    R2: float
    n: float
    d: float
    C_D: float
    C_D_radii: tuple
    C_S: float
    sobolev: list[SobolevEstimate]
    targets: dict = field(default_factory=dict)
    passed: bool = True
    violations: list[str] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return all(s.converged for s in self.sobolev)

    def C_S_at(self, R: float) -> float:
        """Largest estimated constant over the certified radii <= R."""
        vals = [s.C_S for s in self.sobolev if s.R <= R + 1e-12]
        return max(vals) if vals else self.C_S

    def to_json(self, g: WeightedGraph | None = None) -> dict:
        name = g.ids[self.center] if g is not None else self.center
        return {
            "center": name, "R1": self.R1, "R2": self.R2, "n": self.n, "d": self.d,
            "C_D": self.C_D, "C_D_radii": list(self.C_D_radii), "C_S": self.C_S,
            "converged": self.converged, "targets": self.targets, "passed": self.passed,
            "violations": self.violations,
            "sobolev": [
                {"R": s.R, "C_S": s.C_S, "converged": s.converged, "starts": s.starts,
                 "certificate": {(g.ids[i] if g is not None else int(i)): float(s.certificate[i])
                                 for i in s.support}}
                for s in self.sobolev
            ],
        }


def sobolev_radii(rho: np.ndarray, x: int, R1: float, R2: float) -> np.ndarray:
    """Left endpoints of the volume steps on [R1, R2]; the Sobolev ratio is largest there."""
    d = realized_radii(rho, x, R1, R2)
    grid = np.unique(np.concatenate([[R1], d[d > R1]]))
    return grid[grid > 0]


def sv_check(g: WeightedGraph, rho: np.ndarray, x: int, R1: float, R2: float, n: float, d: float,
             targets: dict | None = None, budget: int = 1, seed: int = 0,
             radii=None) -> SVEstimate:
    if not R1 <= R2:
        raise ValueError("need R1 <= R2")
    targets = dict(targets or {})
    grid = sobolev_radii(rho, x, R1, R2) if radii is None else np.asarray(radii, dtype=float)
    ests, warm = [], None
    for R in grid:
        est = sobolev_constant(g, rho, x, float(R), n, budget=budget, seed=seed, warm=warm)
        warm = est.certificate
        ests.append(est)
    C_S = max(e.C_S for e in ests)
    C_D, arg = doubling_constant(g, rho, x, R1, R2, d)
    violations = []
    if "C_S" in targets:
        violations += [f"C_S={e.C_S:.6g} > target {targets['C_S']} at R={e.R}" for e in ests
                       if e.C_S > targets["C_S"]]
    if "C_D" in targets and C_D > targets["C_D"]:
        violations.append(f"C_D={C_D:.6g} > target {targets['C_D']} at (r1, r2)={arg}")
    return SVEstimate(x, R1, R2, n, d, C_D, arg, C_S, ests, targets, not violations, violations)
