"""Gaussian upper-bound formulas and their assembly into checkable right-hand sides.

Every constant is handled as a natural logarithm: the theorem constants
overflow double precision already for moderate n and d.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import geometry as geo
from .graph import WeightedGraph
from .semigroup import HeatSystem, heat_kernel

PASS_RTOL = 1e-9
VACUOUS_LOG_MARGIN = 500.0



class HypothesisError(ValueError):
    """A precondition of a bound is not met or not certified."""


# --- scalar formulas -------------------------------------------------------

_SERIES_CUT = 1e-4


def arsinh(z):
    """ln(z + sqrt(z^2 + 1)) with a Taylor branch near 0; odd extension for z < 0.

    The log form is evaluated as log1p(a + a^2 / (sqrt(a^2 + 1) + 1)), which
    keeps full relative accuracy for small a.
    """
    z = np.asarray(z, dtype=float)
    a = np.abs(z)
    with np.errstate(over="ignore"):
        a2 = a * a
        mid = np.log1p(a + a2 / (np.sqrt(a2 + 1.0) + 1.0))
    # a^2 overflows for huge a; there ln(2a) is exact to double precision
    big = np.where(a > 1e150, np.log(2.0) + np.log(np.where(a > 0, a, 1.0)), mid)
    small = a * (1.0 - a2 / 6.0 + 3.0 * a2 * a2 / 40.0)
    out = np.sign(z) * np.where(a < _SERIES_CUT, small, big)
    return out if out.ndim else float(out)


def _hyp_excess(a, t):
    """sqrt(t^2 + a^2) - t without cancellation."""
    return a * a / (np.sqrt(t * t + a * a) + t)


def _check_t(t):
    if np.any(np.asarray(t) <= 0):
        raise ValueError("t must be positive")


def zeta(r, t, S: float = 1.0):
    """zeta_S(r, t) = S^-2 (rS arsinh(rS/t) + t - sqrt(t^2 + r^2 S^2))."""
    _check_t(t)
    if not S > 0:
        raise ValueError("S must be positive")
    r = np.asarray(r, dtype=float)
    t = np.asarray(t, dtype=float)
    a = r * S
    out = (a * arsinh(a / t) - _hyp_excess(a, t)) / S**2
    out = np.maximum(out, 0.0)
    return out if out.ndim else float(out)


def sigma(r, t, S: float = 1.0):
    """sigma(r, t) = 2 S^-2 (sqrt(1 + r^2 S^2 / t^2) - 1)."""
    _check_t(t)
    th = np.asarray(r, dtype=float) * S / np.asarray(t, dtype=float)
    out = 2.0 * th * th / (np.sqrt(1.0 + th * th) + 1.0) / S**2
    return out if np.ndim(out) else float(out)


def gamma_eta(eta, S: float = 1.0):
    """2 S^-2 (cosh(eta) - 1)."""
    out = 4.0 * np.sinh(np.asarray(eta, dtype=float) / 2.0) ** 2 / S**2
    return out if np.ndim(out) else float(out)


def log_poly_correction(r, t, S: float, n: float):
    """(n/2) ln(1 v S^-2 (sqrt(t^2 + r^2 S^2) - t))."""
    _check_t(t)
    base = np.maximum(1.0, _hyp_excess(np.asarray(r, dtype=float) * S, np.asarray(t, dtype=float)) / S**2)
    out = 0.5 * n * np.log(base)
    return out if np.ndim(out) else float(out)


def poly_correction(r, t, S: float, n: float):
    out = np.exp(log_poly_correction(r, t, S, n))
    return out if np.ndim(out) else float(out)


def davies_objective(eta, theta):
    """f(eta, theta) = -eta + (cosh(eta) - 1)/theta."""
    return -np.asarray(eta) + gamma_eta(eta, 1.0) / 2.0 / theta


def davies_F(theta):
    """F(theta) = (sqrt(1 + theta^2) - 1)/theta - arsinh(theta), the minimum of f(., theta)."""
    th = np.asarray(theta, dtype=float)
    out = th / (np.sqrt(1.0 + th * th) + 1.0) - arsinh(th)
    return out if np.ndim(out) else float(out)


def davies_exponent_optimizer(r: float, t: float, S: float = 1.0) -> tuple[float, float]:
    """Minimizer eta* = arsinh(theta) and value F(theta) at theta = rS/t (t = 2T)."""
    _check_t(t)
    if r == 0:
        return 0.0, 0.0
    th = r * S / t
    return float(arsinh(th)), float(davies_F(th))


# --- constants -------------------------------------------------------------

def log_C_beta(beta: float) -> float:
    """ln C_beta, C_beta = 4^{((4 + 1/ln beta) + beta/(beta - 1))/(beta - 1)}."""
    if not beta > 1:
        raise ValueError("beta must exceed 1")
    return math.log(4.0) * ((4.0 + 1.0 / math.log(beta)) + beta / (beta - 1.0)) / (beta - 1.0)


def log_C_dn(C_D: float, C_S: float, n: float, d: float) -> float:
    """ln C_{d,n} = ln[(1 v C_D)(1 v C_D^{n/2+1} C_S^{n/2}) 10^{8((n+2)(d+1)+n^2+n)+1}]."""
    if not (C_D > 0 and C_S > 0):
        raise ValueError("constants must be positive")
    a = max(0.0, math.log(C_D))
    b = max(0.0, (n / 2 + 1) * math.log(C_D) + (n / 2) * math.log(C_S))
    return a + b + (8 * ((n + 2) * (d + 1) + n * n + n) + 1) * math.log(10.0)


def log_C_dnb(C_D: float, C_S: float, params: geo.Params) -> float:
    return log_C_beta(params.beta) + log_C_dn(C_D, C_S, params.n, params.d)


def log_main_constant(pi: geo.Params, pj: geo.Params, C_Di: float, C_Dj: float,
                      C_Si: float, C_Sj: float) -> float:
    """ln of 2^{3 + n_ij + d_i + d_j} e C_{D,i} C_{D,j} sqrt(C_{d_i,n_i,beta_i} C_{d_j,n_j,beta_j})."""
    nij = 0.5 * (pi.n + pj.n)
    return ((3 + nij + pi.d + pj.d) * math.log(2.0) + 1.0 + math.log(C_Di) + math.log(C_Dj)
            + 0.5 * (log_C_dnb(C_Di, C_Si, pi) + log_C_dnb(C_Dj, C_Sj, pj)))


# --- inputs and reports ----------------------------------------------------

@dataclass
class BoundInputs:
    """Scalar data entering the bound for one pair (x, y) at time t."""

    x: int
    y: int
    rho: float
    t: float
    S: float
    params_i: geo.Params
    params_j: geo.Params
    r_i: float
    R_i: float
    r_j: float
    R_j: float
    Lambda: float
    C_D_i: float
    C_D_j: float
    C_S_i: float
    C_S_j: float
    certified_i: bool = True
    certified_j: bool = True

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError("t must be positive")
        if self.rho < 0:
            raise ValueError("rho must be nonnegative")
        if not self.S > 0:
            raise ValueError("S must be positive")
        for name in ("C_D_i", "C_D_j", "C_S_i", "C_S_j"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for r, R in ((self.r_i, self.R_i), (self.r_j, self.R_j)):
            if not (r > 0 and R >= 2 * r * (1 - 1e-12)):
                raise ValueError(f"need R >= 2r > 0, got r={r}, R={R}")

    @property
    def n_ij(self) -> float:
        return 0.5 * (self.params_i.n + self.params_j.n)

    @property
    def tau_i(self) -> float:
        return min(math.sqrt(self.t / 8), self.R_i / 2)

    @property
    def tau_j(self) -> float:
        return min(math.sqrt(self.t / 8), self.R_j / 2)


FACTORS = ("constant", "gamma_i", "gamma_j", "poly", "volume", "spectral", "gaussian")


@dataclass
class BoundReport:
    """Exact kernel value against an assembled right-hand side, in log space."""

    x: str
    y: str
    t: float
    lhs: float
    log_lhs: float
    log_rhs: float
    factors: dict = field(default_factory=dict)
    variant: str = "main"

    @property
    def log_margin(self) -> float:
        return self.log_rhs - self.log_lhs

    @property
    def passed(self) -> bool:
        return self.log_lhs <= self.log_rhs + math.log1p(PASS_RTOL)

    @property
    def status(self) -> str:
        if not self.passed:
            return "fail"
        return "vacuous-pass" if self.log_margin > VACUOUS_LOG_MARGIN else "pass"

    @property
    def rhs(self) -> float:
        return math.exp(self.log_rhs) if self.log_rhs < 709 else math.inf

    def row(self) -> dict:
        out = {"x": self.x, "y": self.y, "t": self.t, "log_lhs": self.log_lhs,
               "log_rhs": self.log_rhs, "log_margin": self.log_margin,
               "pass": self.passed, "status": self.status}
        for k in FACTORS:
            out["log_" + k] = self.factors.get(k, math.nan)
        return out


BOUND_COLUMNS = ["x", "y", "t", "log_lhs", "log_rhs", "log_margin", "pass", "status"] + [
    "log_" + k for k in FACTORS]


def _log(v: float) -> float:
    return math.log(v) if v > 0 else -math.inf


# --- assembly --------------------------------------------------------------

def _common_factors(inp: BoundInputs, g: WeightedGraph, rho: np.ndarray, vol_radius_i, vol_radius_j,
                    spectral: bool) -> dict:
    Vi = geo.ball_volume(g, rho, inp.x, vol_radius_i)
    Vj = geo.ball_volume(g, rho, inp.y, vol_radius_j)
    f = {
        "poly": log_poly_correction(inp.rho, inp.t, inp.S, inp.n_ij),
        "volume": -0.5 * (math.log(Vi) + math.log(Vj)),
        "gaussian": -zeta(inp.rho, inp.t, inp.S),
        "spectral": 0.0,
    }
    if spectral:
        t = inp.t
        f["spectral"] = -inp.Lambda * (t - 0.5 * (min(t, inp.R_i**2) + min(t, inp.R_j**2)))
    return f


def _require_time(inp: BoundInputs) -> None:
    need = 8 * max(inp.r_i**2, inp.r_j**2)
    if inp.t < need * (1 - 1e-12):
        raise HypothesisError(f"t >= 8 max(r_i^2, r_j^2) = {need} fails at t = {inp.t}")


def _require_certified(inp: BoundInputs, statement: str) -> None:
    if not (inp.certified_i and inp.certified_j):
        raise HypothesisError(f"{statement}: SV hypotheses not certified for both centers")


def main_bound_rhs(inp: BoundInputs, g: WeightedGraph, rho: np.ndarray) -> dict:
    """Factor breakdown (natural logs) of the main Gaussian bound; their sum is ln rhs."""
    _require_certified(inp, "main_bound")
    for r, p in ((inp.r_i, inp.params_i), (inp.r_j, inp.params_j)):
        r0 = geo.R0(inp.S, p.n, p.q)
        if r < r0 * (1 - 1e-12):
            raise HypothesisError(f"main_bound: r = {r} below R0 = {r0}")
    _require_time(inp)
    f = _common_factors(inp, g, rho, min(math.sqrt(inp.t), inp.R_i), min(math.sqrt(inp.t), inp.R_j), True)
    f["constant"] = log_main_constant(inp.params_i, inp.params_j, inp.C_D_i, inp.C_D_j, inp.C_S_i, inp.C_S_j)
    f["gamma_i"] = geo.log_gamma_error(g, rho, inp.x, inp.tau_i, inp.params_i, inp.S)
    f["gamma_j"] = geo.log_gamma_error(g, rho, inp.y, inp.tau_j, inp.params_j, inp.S)
    return f


def _log_positive_measure_gamma(g, rho, x, tau, r, C_D, params: geo.Params, S) -> float:
    """ln of the uniform-positive-measure bound on Gamma_x(tau).

    Gamma_x(tau) <= [(inf m)^-q (C_D tau^d)^q]^theta(tau) [mu_x(r)(1 + tau^2 D_p(x, tau))]^theta(tau).
    """
    q, d = params.q, params.d
    _, th = geo.kappa_theta(tau, S, params.beta)
    const = q * (-math.log(g.m.min()) + math.log(C_D) + d * math.log(tau))
    mu_r = geo.mu(g, rho, x, r, d, q)
    return th * (const + math.log(mu_r) + math.log1p(tau * tau * geo.D_p(g, rho, x, tau, params.p)))


def growth_cap_constant(g, rho, x, R1: float, params: geo.Params, S: float) -> float:
    """Smallest C with M_p(x, R), D_p(x, R) <= C exp(exp(gamma sqrt R)) for all R >= R1."""
    gam = geo.theta_rate(params.beta, S)
    radii = geo.realized_radii(rho, x, R1)
    radii = np.unique(np.concatenate([[R1], radii]))
    worst = -math.inf
    for R in radii:
        cap = math.exp(gam * math.sqrt(R))
        worst = max(worst, math.log(geo.M_p(g, rho, x, R, params.p)) - cap,
                    math.log(geo.D_p(g, rho, x, R, params.p)) - cap)
    return math.exp(worst)


def _log_degenerating_gamma(g, rho, x, tau, R1, C_D, C_cap, params: geo.Params, S) -> float:
    """ln of the degenerating-measure bound on Gamma_x(tau), tau >= R1.

    With M_p, D_p <= C e^{E}, E = exp(gamma sqrt tau), and doubling from R1:
    Gamma_x(tau) <= [(1 + tau^2 C e^E) C^q e^{qE} (C_D tau^d)^q]^theta(tau) mu_x(R1)^theta(tau).
    """
    q, d = params.q, params.d
    _, th = geo.kappa_theta(tau, S, params.beta)
    E = math.exp(geo.theta_rate(params.beta, S) * math.sqrt(tau))
    lc = math.log(C_cap)
    base = (np.logaddexp(0.0, 2 * math.log(tau) + lc + E) + q * (lc + E)
            + q * (math.log(C_D) + d * math.log(tau)))
    return th * (float(base) + math.log(geo.mu(g, rho, x, R1, d, q)))


def special_case_rhs(variant: str, inp: BoundInputs, g: WeightedGraph, rho: np.ndarray,
                     C_cap: float | None = None) -> dict:
    """Factor breakdown of the three special-case bounds.

    ``normalized``: m = deg, S = 1, Gamma replaced by its Sobolev bound, with
    R/2 >= r >= 42.  ``positive_measure``: inf m > 0, Gamma replaced by the
    mu/D_p bound.  ``degenerating``: R = inf, no spectral term, Gamma replaced
    by the growth-cap bound with ``C_cap``.  The constant is that of the main
    bound, with the Gamma substitutions carried inside the gamma factors.
    """
    _require_certified(inp, variant)
    _require_time(inp)
    f = {"constant": log_main_constant(inp.params_i, inp.params_j, inp.C_D_i, inp.C_D_j,
                                       inp.C_S_i, inp.C_S_j)}
    if variant == "normalized":
        if not np.allclose(g.m, g.deg, rtol=1e-12, atol=0):
            raise HypothesisError("normalized: measure is not deg")
        if abs(inp.S - 1.0) > 1e-12:
            raise HypothesisError("normalized: expects the combinatorial metric with S = 1")
        for r, R in ((inp.r_i, inp.R_i), (inp.r_j, inp.R_j)):
            if not (R / 2 >= r >= 42):
                raise HypothesisError(f"normalized: need R/2 >= r >= 42, got r={r}, R={R}")
        f.update(_common_factors(inp, g, rho, min(math.sqrt(inp.t), inp.R_i),
                                 min(math.sqrt(inp.t), inp.R_j), True))
        f["gamma_i"] = geo.log_normalized_gamma_bound(inp.tau_i, inp.C_S_i, inp.params_i, 1.0)
        f["gamma_j"] = geo.log_normalized_gamma_bound(inp.tau_j, inp.C_S_j, inp.params_j, 1.0)
        return f
    for r, p in ((inp.r_i, inp.params_i), (inp.r_j, inp.params_j)):
        r0 = geo.R0(inp.S, p.n, p.q)
        if r < r0 * (1 - 1e-12):
            raise HypothesisError(f"{variant}: r = {r} below R0 = {r0}")
    if variant == "positive_measure":
        if not g.m.min() > 0:
            raise HypothesisError("positive_measure: inf m must be positive")
        f.update(_common_factors(inp, g, rho, min(math.sqrt(inp.t), inp.R_i),
                                 min(math.sqrt(inp.t), inp.R_j), True))
        f["gamma_i"] = _log_positive_measure_gamma(g, rho, inp.x, inp.tau_i, inp.r_i, inp.C_D_i,
                                                   inp.params_i, inp.S)
        f["gamma_j"] = _log_positive_measure_gamma(g, rho, inp.y, inp.tau_j, inp.r_j, inp.C_D_j,
                                                   inp.params_j, inp.S)
        return f
    if variant == "degenerating":
        if not (math.isinf(inp.R_i) and math.isinf(inp.R_j)):
            raise HypothesisError("degenerating: needs R = inf")
        if C_cap is None:
            raise HypothesisError("degenerating: growth cap constant not certified")
        f.update(_common_factors(inp, g, rho, math.sqrt(inp.t), math.sqrt(inp.t), False))
        f["gamma_i"] = _log_degenerating_gamma(g, rho, inp.x, inp.tau_i, inp.r_i, inp.C_D_i, C_cap,
                                               inp.params_i, inp.S)
        f["gamma_j"] = _log_degenerating_gamma(g, rho, inp.y, inp.tau_j, inp.r_j, inp.C_D_j, C_cap,
                                               inp.params_j, inp.S)
        return f
    raise ValueError(f"unknown variant {variant!r}")


def assemble(inp: BoundInputs, g: WeightedGraph, rho: np.ndarray, lhs: float, variant: str = "main",
             C_cap: float | None = None, log_shift: float = 0.0) -> BoundReport:
    """Build a BoundReport; ``log_shift`` is added to the constant (negative controls)."""
    if variant == "main":
        f = main_bound_rhs(inp, g, rho)
    else:
        f = special_case_rhs(variant, inp, g, rho, C_cap)
    f["constant"] += log_shift
    log_rhs = float(sum(f[k] for k in FACTORS))
    return BoundReport(g.ids[inp.x], g.ids[inp.y], inp.t, float(lhs), _log(lhs), log_rhs, f, variant)


def verify_bound(hs: HeatSystem, rho: np.ndarray, inputs, variant: str = "main",
                 C_cap: float | None = None, log_shift: float = 0.0) -> list[BoundReport]:
    """Compare the exact kernel with the assembled bound on every grid point."""
    g = hs.graph
    out = []
    for inp in inputs:
        p = heat_kernel(hs, inp.t)
        out.append(assemble(inp, g, rho, float(p[inp.x, inp.y]), variant, C_cap, log_shift))
    return out


def summarize_bounds(reports: list[BoundReport]) -> dict:
    counts: dict[str, int] = {}
    for r in reports:
        counts[r.status] = counts.get(r.status, 0) + 1
    margins = [r.log_margin for r in reports if math.isfinite(r.log_margin)]
    return {
        "total": len(reports),
        "counts": counts,
        "all_passed": all(r.passed for r in reports),
        "min_log_margin": min(margins) if margins else math.inf,
        "failures": [asdict(r) | {"log_margin": r.log_margin} for r in reports if not r.passed],
    }
