"""The l^2 mean-value inequality for solutions of the sandwiched heat equation."""
from __future__ import annotations

import math

import numpy as np

from .. import bounds as bd
from .. import geometry as geo
from ..graph import h_omega
from ..metric import ball
from ..report import CheckReport
from .common import HypothesisError, log_or_neginf, time_max
from .quadrature import integrate
from .samples import SolutionSample


def pivot_report(R: float, S: float, params: geo.Params) -> CheckReport:
    """alpha^kappa(R/2) >= beta^kappa(R/2) q, the exponent comparison behind the mean-value step."""
    k, _ = geo.kappa_theta(R / 2, S, params.beta)
    lhs = k * math.log(params.beta) + math.log(params.q)
    rhs = k * math.log(params.alpha)
    return CheckReport.compare("mv2_pivot", lhs, rhs, 1e-12,
                               instance={"R": R, "S": S, "n": params.n, "p": params.p, "kappa": k})


def log_mv2_factor(g, rho, x: int, R: float, tau: float, h: float, params: geo.Params, S: float,
                   C_D: float, C_S: float) -> float:
    """ln of C_{d,n,beta} Gamma(R/2)^2 (1 + tau R^2 h)^{n/2+1} / (tau^{n/2+1} R^2 m(B(R)))."""
    n = params.n
    return (bd.log_C_dnb(C_D, C_S, params) + 2 * geo.log_gamma_error(g, rho, x, R / 2, params, S)
            + (n / 2 + 1) * math.log1p(tau * R * R * h) - (n / 2 + 1) * math.log(tau)
            - 2 * math.log(R) - math.log(geo.ball_volume(g, rho, x, R)))


def mv2_log_phi(g, rho, x: int, r: float, delta: float, params: geo.Params, S: float,
                C_D: float, C_S: float):
    """h -> ln phi(x, h) with phi^-2 the mean-value factor at radius r and width delta."""
    def log_phi(h: float) -> float:
        return -0.5 * log_mv2_factor(g, rho, x, r, delta, h, params, S, C_D, C_S)
    return log_phi


def check_mv2(sample: SolutionSample, rho, x: int, R: float, tau: float, T: float, params: geo.Params,
              S: float, C_D: float, C_S: float, certified: bool, rtol: float = 1e-8) -> list[CheckReport]:
    """sup of v^2 on [T - tau R^2/8, T + tau R^2/8] x B(R/2) against the space-time l^2 mass on the
    full cylinder; returns the inequality and the pivot side-check."""
    r0 = geo.R0(S, params.n, params.q)
    if R < r0 * (1 - 1e-12):
        raise ValueError(f"mv2: R = {R} below R0 = {r0}")
    if not certified:
        raise HypothesisError("mv2: SV(R/2, R) not certified")
    if not 0 < tau <= 1:
        raise ValueError("tau must lie in (0, 1]")
    if sample.kind != "solution":
        raise ValueError("mv2 needs a solution")
    lo, hi = sample.interval
    if T - R * R < lo - 1e-12 or T + R * R > hi + 1e-12:
        raise ValueError("sample does not cover [T - R^2, T + R^2]")
    g = sample.graph
    half = ball(rho, x, R / 2)
    full = ball(rho, x, R)
    w = tau * R * R / 8
    lhs, _ = time_max(lambda t: float(sample.value(t)[half].max() ** 2), T - w, T + w)
    W = tau * R * R
    mass = integrate(lambda t: float(np.sum(g.m[full] * sample.value(t)[full] ** 2)), T - W, T + W, rtol)
    h = h_omega(g, sample.omega)
    log_rhs = log_mv2_factor(g, rho, x, R, tau, h, params, S, C_D, C_S) + log_or_neginf(mass)
    main = CheckReport.compare_log("mv2", log_or_neginf(lhs), log_rhs, rtol,
                                   instance={"center": g.ids[x], "R": R, "tau": tau, "T": T,
                                             "n": params.n, "d": params.d, "p": params.p, **sample.recipe})
    return [main, pivot_report(R, S, params)]
