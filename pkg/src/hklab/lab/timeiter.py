"""Checks for the fixed-space (time-only) Moser iteration on a finite measure space (B, mu)."""
from __future__ import annotations

import math

import numpy as np

from .. import bounds as bd
from ..report import CheckReport
from .common import conjugate, log_or_neginf, mu_norm, time_max
from .quadrature import integrate
from .samples import SolutionSample

INTERP_TOL = 1e-12


def inverse_norm(mu, p: float) -> float:
    """|| mu^-1 ||_{l^p(B, mu)}."""
    mu = np.asarray(mu, dtype=float)
    return mu_norm(1.0 / mu, mu, p)


def check_interpolation(mu, v, p: float, instance=None) -> CheckReport:
    """||v||_inf <= ||mu^-1||_p ||v||_q on (B, mu)."""
    mu = np.asarray(mu, dtype=float)
    if np.any(mu <= 0):
        raise ValueError("measure must be positive")
    q = conjugate(p)
    lhs = float(np.abs(v).max())
    rhs = inverse_norm(mu, p) * mu_norm(v, mu, q)
    return CheckReport.compare("interpolation", lhs, rhs, INTERP_TOL, relative=True,
                               instance=dict(instance or {}, p=p))


def check_interpolation_random(draws: int = 10_000, seed: int = 0) -> list[CheckReport]:
    rng = np.random.default_rng(seed)
    worst = None
    out = []
    for i in range(draws):
        k = int(rng.integers(1, 12))
        mu = np.exp(rng.uniform(-4, 3, k))
        v = rng.standard_normal(k) * np.exp(rng.uniform(-2, 2, k))
        p = math.inf if rng.random() < 0.1 else (1.0 if rng.random() < 0.05 else float(np.exp(rng.uniform(0, 3))))
        r = check_interpolation(mu, v, p, {"draw": i, "seed": seed})
        if not r.passed:
            out.append(r)
        if worst is None or r.margin / max(r.rhs, 1e-300) < worst.margin / max(worst.rhs, 1e-300):
            worst = r
    return out or [worst]


class _Space:
    """Restriction of a sample to B with a measure mu on B."""

    def __init__(self, sample: SolutionSample, B, mu, p: float):
        self.sample = sample
        self.B = np.asarray(B, dtype=int)
        self.mu = np.asarray(mu, dtype=float)
        if self.mu.shape != self.B.shape or np.any(self.mu <= 0):
            raise ValueError("mu must be a positive weight per vertex of B")
        if not set(self.B.tolist()) <= set(np.asarray(sample.domain).tolist()):
            raise ValueError("B must lie inside the sample's domain")
        self.p = p
        self.q = conjugate(p)
        self.Deg = sample.graph.Deg[self.B]

    def v(self, t):
        return self.sample.value(t)[self.B]

    def norm_s(self, t, s, r):
        return mu_norm(self.v(t) ** s, self.mu, r)

    @property
    def mass(self) -> float:
        return float(self.mu.sum())

    @property
    def mass_p(self) -> float:
        return 1.0 if self.p == math.inf else self.mass ** (1.0 / self.p)

    @property
    def Deg_p(self) -> float:
        return mu_norm(self.Deg, self.mu, self.p)

    @property
    def inv_p(self) -> float:
        return inverse_norm(self.mu, self.p)


def _window(sample, a, b):
    lo, hi = sample.interval
    if a < lo - 1e-12 or b > hi + 1e-12:
        raise ValueError(f"time window [{a}, {b}] outside the sample interval [{lo}, {hi}]")


def check_supersolution_maximal(sample: SolutionSample, B, mu, T1, T2, T3, T4, s: float, p: float,
                                rtol: float = 1e-8) -> CheckReport:
    """max_[T2,T3] ||v^s||_1 <= (mu(B)^{1/p}/(T4 - T3) + s ||Deg||_p) int_{T1}^{T4} ||v^s||_q."""
    if not (T1 <= T2 <= T3 < T4):
        raise ValueError("need T1 <= T2 <= T3 < T4")
    if s < 1:
        raise ValueError("s must be >= 1")
    if sample.kind == "subsolution":
        raise ValueError("needs a supersolution")
    _window(sample, T1, T4)
    sp_ = _Space(sample, B, mu, p)
    lhs, _ = time_max(lambda t: sp_.norm_s(t, s, 1.0), T2, T3)
    rhs = (sp_.mass_p / (T4 - T3) + s * sp_.Deg_p) * integrate(lambda t: sp_.norm_s(t, s, sp_.q), T1, T4, rtol)
    return CheckReport.compare("supersolution_maximal", lhs, rhs, rtol * max(lhs, rhs, 1e-300),
                               instance={"T": [T1, T2, T3, T4], "s": s, "p": p, **sample.recipe})


def _check_beta(beta: float, q: float):
    if not 1 < beta < 1 + 1 / q:
        raise ValueError(f"beta must lie in (1, 1 + 1/q) = (1, {1 + 1 / q}), got {beta}")


def check_time_iteration_step(sample: SolutionSample, B, mu, T1, T2, T3, T4, s: float, p: float,
                              beta: float, rtol: float = 1e-8) -> CheckReport:
    """int_{T2}^{T3} ||v^{s beta}||_q <= [s((1 v mu(B)^{1/p})/(T4-T3) + ||Deg||_p)||mu^-1||_p^q]^{beta-1}
    (int_{T1}^{T4} ||v^s||_q)^beta."""
    if not p > 1:
        raise ValueError("p must lie in (1, inf]")
    if not (T1 <= T2 <= T3 < T4):
        raise ValueError("need T1 <= T2 <= T3 < T4")
    if s < 1:
        raise ValueError("s must be >= 1")
    _window(sample, T1, T4)
    sp_ = _Space(sample, B, mu, p)
    _check_beta(beta, sp_.q)
    q = sp_.q
    left = integrate(lambda t: sp_.norm_s(t, s * beta, q), T2, T3, rtol)
    right = integrate(lambda t: sp_.norm_s(t, s, q), T1, T4, rtol)
    base = s * (max(1.0, sp_.mass_p) / (T4 - T3) + sp_.Deg_p) * sp_.inv_p**q
    log_rhs = (beta - 1) * math.log(base) + beta * log_or_neginf(right)
    return CheckReport.compare_log("time_iteration_step", log_or_neginf(left), log_rhs, rtol,
                                   instance={"T": [T1, T2, T3, T4], "s": s, "p": p, "beta": beta,
                                             **sample.recipe})


def log_G(mass_p: float, Deg_p: float, inv_p: float, q: float, delta: float, T: float,
          beta: float, k: int) -> float:
    """ln G = ln C_beta + beta^-k ln[((1 v mu(B)^{1/p}) + delta T ||Deg||_p) ||mu^-1||_p^q]."""
    inner = (max(1.0, mass_p) + delta * T * Deg_p) * inv_p**q
    return bd.log_C_beta(beta) + math.log(inner) / beta**k


def check_time_iteration(sample: SolutionSample, B, mu, T: float, delta: float, p: float, beta: float,
                         k: int, rtol: float = 1e-8) -> CheckReport:
    """sup over [(1-delta/2)T, (1+delta/2)T] x B of v^2 <= G (avg of v^{2 beta^k q})^{1/(beta^k q)}."""
    if not p > 1:
        raise ValueError("p must lie in (1, inf]")
    if not delta > 0 or T < 0 or k < 0:
        raise ValueError("need delta > 0, T >= 0, k >= 0")
    _window(sample, (1 - delta) * T, (1 + delta) * T)
    sp_ = _Space(sample, B, mu, p)
    _check_beta(beta, sp_.q)
    q = sp_.q
    lhs, _ = time_max(lambda t: float(sp_.v(t).max() ** 2), (1 - delta / 2) * T, (1 + delta / 2) * T)
    e = beta**k * q
    avg = integrate(lambda t: float(np.sum(sp_.mu * sp_.v(t) ** (2 * e))), (1 - delta) * T,
                    (1 + delta) * T, rtol) / (2 * delta * T)
    log_rhs = log_G(sp_.mass_p, sp_.Deg_p, sp_.inv_p, q, delta, T, beta, k) + log_or_neginf(avg) / e
    return CheckReport.compare_log("time_iteration", log_or_neginf(lhs), log_rhs, rtol,
                                   instance={"T": T, "delta": delta, "p": p, "beta": beta, "k": k,
                                             **sample.recipe})
