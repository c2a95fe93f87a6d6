"""Checks for the space-time maximal inequalities and the space-time Moser step."""
from __future__ import annotations

import math

import numpy as np

from .. import bounds as bd
from .. import geometry as geo
from ..graph import combinatorial_interior, gradient_norm, h_omega
from ..metric import ball
from ..report import CheckReport
from .common import HypothesisError, log_or_neginf, time_max
from .quadrature import integrate
from .samples import SolutionSample

ELEM_TOL = 1e-12


# --- elementary inequalities -----------------------------------------------

def _draw_pairs(rng, count):
    a = np.exp(rng.uniform(-4, 2.3, count))
    b = np.exp(rng.uniform(-4, 2.3, count))
    k = count // 10
    b[:k] = a[:k]
    b[k:2 * k] = 0.0
    a[2 * k:3 * k] = rng.random(k)
    b[2 * k:3 * k] = a[2 * k:3 * k] * (1 + 1e-6 * rng.standard_normal(k))
    b = np.abs(b)
    return a, b


def elementary_violation(which: int, a, b, p):
    """Worst relative violation (positive = violated) of one of the three elementary inequalities.

    Residuals are scaled by max(a, b)^{2p}, the size of the terms involved.
    """
    a, b, p = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float), np.asarray(p, float))
    scale = np.maximum(np.maximum(a, b) ** (2 * p), 1e-300)
    if which == 1:
        small = (2 * p - 1) / p**2 * (a**p - b**p) ** 2
        big = (a ** (2 * p - 1) - b ** (2 * p - 1)) * (a - b)
    elif which == 2:
        small = np.abs(a ** (2 * p - 1) * b - b ** (2 * p - 1) * a)
        big = (p - 1) / p * np.abs(a ** (2 * p) - b ** (2 * p))
    elif which == 3:
        small = (a ** (2 * p - 1) + b ** (2 * p - 1)) * np.abs(a - b)
        big = 4 * np.abs(a**p - b**p) * (a**p + b**p)
    else:
        raise ValueError("which must be 1, 2 or 3")
    return (small - big) / scale


P_RANGE = {1: (0.5, False), 2: (1.0, True), 3: (0.5, True)}


def check_elementary(p_grid=(0.6, 1.0, 2.0, 7.5), sample_count: int = 100_000, seed: int = 0):
    """The three two-point inequalities on random (a, b) >= 0, per fixed p and with random p."""
    rng = np.random.default_rng(seed)
    out = []
    names = {1: "elementary_B1", 2: "elementary_B2", 3: "elementary_B3"}
    for which in (1, 2, 3):
        lo, closed = P_RANGE[which]
        ps = [p for p in p_grid if (p >= lo if closed else p > lo)]
        for p in ps:
            a, b = _draw_pairs(rng, sample_count)
            v = elementary_violation(which, a, b, p)
            out.append(CheckReport.compare(names[which], float(v.max()), 0.0, ELEM_TOL,
                                           instance={"p": p, "draws": sample_count, "seed": seed}))
        a, b = _draw_pairs(rng, sample_count)
        p = rng.uniform(lo + (0 if closed else 1e-6), 8.0, sample_count)
        v = elementary_violation(which, a, b, p)
        out.append(CheckReport.compare(names[which], float(v.max()), 0.0, ELEM_TOL,
                                       instance={"p": "random", "draws": sample_count, "seed": seed}))
    return out


# --- Caccioppoli -----------------------------------------------------------

def _check_support(g, phi, B):
    interior = np.zeros(g.n, dtype=bool)
    interior[list(combinatorial_interior(g, B))] = True
    if np.any(phi < -1e-15) or np.any(phi > 1 + 1e-12):
        raise ValueError("cut-off must take values in [0, 1]")
    if np.any(phi[~interior] != 0):
        raise ValueError("cut-off not supported in B minus its inner boundary")


def caccioppoli_terms(sample: SolutionSample, phi, B, p: float, t: float):
    """(d/dt ||phi v^p||^2, ||phi |grad v^p| ||^2, ||1_B v^p||^2) at time t."""
    g = sample.graph
    v = sample.value(t)
    dv = sample.derivative(t)
    m = g.m
    ddt = float(np.sum(m * phi**2 * 2 * p * v ** (2 * p - 1) * dv))
    grad = float(np.sum(m * phi**2 * gradient_norm(g, v**p) ** 2))
    inB = np.zeros(g.n, dtype=bool)
    inB[np.asarray(B, dtype=int)] = True
    mass = float(np.sum(m[inB] * v[inB] ** (2 * p)))
    return ddt, grad, mass


def check_caccioppoli(sample: SolutionSample, phi, B, p: float, times, tol: float = 1e-8):
    """d/dt||phi v^p||^2 + 1/2 ||phi|grad v^p|||^2 <= 166 p^2 (h(omega) + || |grad phi| ||_inf^2) ||1_B v^p||^2."""
    if p < 1:
        raise ValueError("p must be >= 1")
    g = sample.graph
    phi = np.asarray(phi, dtype=float)
    B = np.asarray(sorted(set(int(i) for i in B)), dtype=int)
    _check_support(g, phi, B)
    if sample.kind == "supersolution":
        raise ValueError("Caccioppoli needs a subsolution")
    h = h_omega(g, sample.omega)
    gphi = float(gradient_norm(g, phi).max()) ** 2
    out = []
    for t in times:
        ddt, grad, mass = caccioppoli_terms(sample, phi, B, p, t)
        lhs = ddt + 0.5 * grad
        rhs = 166 * p * p * (h + gphi) * mass
        scale = max(abs(ddt), grad, rhs, 1.0)
        out.append(CheckReport.compare("caccioppoli", lhs, rhs, tol * scale,
                                       instance={"t": float(t), "p": p, **sample.recipe}))
    return out


# --- pointwise claim -------------------------------------------------------

def claim_sides(psi, phi, v, p):
    """Both sides of the two-point claim; arrays of shape (..., 2) hold the values at x and y."""
    psi, phi, v = (np.asarray(a, dtype=float) for a in (psi, phi, v))

    def grad(f):
        return f[..., 0] - f[..., 1]

    def av(f):
        return 0.5 * (f[..., 0] + f[..., 1])

    lhs = grad(phi**2 * v ** (2 * p - 1) * psi) * grad(v / psi)
    cross = np.abs(grad(psi) * grad(1.0 / psi))
    rhs = (av(phi**2) * grad(v**p) ** 2 / (2 * p)
           - (6 + 160 * p) * (cross * av(phi**2) + grad(phi) ** 2) * av(v ** (2 * p)))
    scale = np.maximum(av(phi**2) * av(v ** (2 * p)) * (1 + cross) + grad(phi) ** 2 * av(v ** (2 * p)), 1e-300)
    return lhs, rhs, scale


def check_pointwise_claim(g, omega, v, phi, p: float, pairs, tol: float = ELEM_TOL):
    """Per-pair check of the claim on graph data (psi = e^omega)."""
    psi = np.exp(np.asarray(omega, dtype=float))
    v = np.asarray(v, dtype=float)
    phi = np.asarray(phi, dtype=float)
    out = []
    for x, y in pairs:
        idx = [x, y]
        lhs, rhs, scale = claim_sides(psi[idx], phi[idx], v[idx], p)
        out.append(CheckReport.compare("pointwise_claim", float(rhs), float(lhs), tol * float(scale),
                                       instance={"x": g.ids[x], "y": g.ids[y], "p": p}))
    return out


def check_pointwise_claim_random(draws: int = 10_000, p_values=(1.0, 1.5, 2.0, 5.0), seed: int = 0):
    rng = np.random.default_rng(seed)
    out = []
    for p in p_values:
        psi = np.exp(rng.uniform(-3, 3, (draws, 2)))
        phi = rng.random((draws, 2))
        v = np.exp(rng.uniform(-3, 2, (draws, 2)))
        v[: draws // 10, 1] = v[: draws // 10, 0]
        lhs, rhs, scale = claim_sides(psi, phi, v, p)
        worst = float(((rhs - lhs) / scale).max())
        out.append(CheckReport.compare("pointwise_claim", worst, 0.0, ELEM_TOL,
                                       instance={"p": p, "draws": draws, "seed": seed}))
    return out


# --- maximal inequality for subsolutions -----------------------------------

def _ball_mask(g, rho, x, R):
    mask = np.zeros(g.n, dtype=bool)
    mask[ball(rho, x, R)] = True
    return mask


def _require_window(sample: SolutionSample, a: float, b: float):
    lo, hi = sample.interval
    if a < lo - 1e-12 or b > hi + 1e-12:
        raise ValueError(f"time window [{a}, {b}] outside the sample interval [{lo}, {hi}]")


def check_maximal_subsolution(sample: SolutionSample, rho, x: int, R1: float, R2: float,
                              T1: float, T2: float, T3: float, p: float, S: float,
                              rtol: float = 1e-8) -> CheckReport:
    """max_[T2,T3] ||1_{B(R1)} v^p||^2 + int ||1_{B(R1)}|grad v^p|||^2
    <= 332 p^2 (h + (R2-R1-S)^-2 + (T2-T1)^-1) int_{T1}^{T3} ||1_{B(R2)} v^p||^2."""
    if not R2 - S > R1:
        raise ValueError("need R2 - S > R1")
    if not T1 < T2 < T3:
        raise ValueError("need T1 < T2 < T3")
    if p < 1:
        raise ValueError("p must be >= 1")
    _require_window(sample, T1, T3)
    g = sample.graph
    m = g.m
    B1 = _ball_mask(g, rho, x, R1)
    B2 = _ball_mask(g, rho, x, R2)

    def mass(t, mask):
        v = sample.value(t)
        return float(np.sum(m[mask] * v[mask] ** (2 * p)))

    def grad(t):
        v = sample.value(t)
        return float(np.sum((m * gradient_norm(g, v**p) ** 2)[B1]))

    peak, _ = time_max(lambda t: mass(t, B1), T2, T3)
    lhs = peak + integrate(grad, T2, T3, rtol)
    h = h_omega(g, sample.omega)
    const = 332 * p * p * (h + 1 / (R2 - R1 - S) ** 2 + 1 / (T2 - T1))
    rhs = const * integrate(lambda t: mass(t, B2), T1, T3, rtol)
    note = "low-information: R2 - R1 barely above S" if R2 - R1 - S < 0.05 * S else ""
    return CheckReport.compare("maximal_subsolution", lhs, rhs, rtol * max(rhs, lhs, 1e-300),
                               instance={"center": g.ids[x], "R1": R1, "R2": R2, "T": [T1, T2, T3],
                                         "p": p, **sample.recipe}, note=note)


# --- parabolic step --------------------------------------------------------

def parabolic_C0(g, rho, x, R1, R2, R3, T1, T2, T3, p, n, S, C_S, h) -> float:
    """ln C0 of the one-step space-time estimate."""
    a = 1 + 2 / n
    V1, V2, V3 = (geo.ball_volume(g, rho, x, R) for R in (R1, R2, R3))
    inner = h + 1 / (R3 - R2 - S) ** 2 + 1 / (R2 - R1 - S) ** 2 + 1 / (T2 - T1)
    return (math.log(C_S) + a * math.log(996) + 2 * a * math.log(p) + 2 * math.log(R2)
            + math.log(V3 / V1) + (2 / n) * math.log(V3 / V2)
            + a * math.log(T3 - T1) - math.log(T3 - T2) + a * math.log(inner))


def check_parabolic_step(sample: SolutionSample, rho, x: int, R1: float, R2: float, R3: float,
                         T1: float, T2: float, T3: float, p: float, n: float, S: float,
                         C_S: float, certified: bool, rtol: float = 1e-8) -> CheckReport:
    """Averaged l^{2p alpha} norm on B(R1) x [T2,T3] against the l^{2p} norm on B(R3) x [T1,T3]."""
    if not certified:
        raise HypothesisError("parabolic_step: Sobolev inequality S(n, R2) not certified")
    if not (T1 < T2 < T3 and 0 <= R1 < R2 < R3 and R1 < R2 - S and R2 < R3 - S):
        raise ValueError("parabolic_step: radius/time ordering violated")
    _require_window(sample, T1, T3)
    g = sample.graph
    a = 1 + 2 / n
    m = g.m
    B1 = _ball_mask(g, rho, x, R1)
    B3 = _ball_mask(g, rho, x, R3)
    mB1, mB3 = m[B1] / m[B1].sum(), m[B3] / m[B3].sum()
    left = integrate(lambda t: float(np.sum(mB1 * sample.value(t)[B1] ** (2 * p * a))), T2, T3, rtol) / (T3 - T2)
    right = integrate(lambda t: float(np.sum(mB3 * sample.value(t)[B3] ** (2 * p))), T1, T3, rtol) / (T3 - T1)
    h = h_omega(g, sample.omega)
    log_rhs = parabolic_C0(g, rho, x, R1, R2, R3, T1, T2, T3, p, n, S, C_S, h) + a * log_or_neginf(right)
    return CheckReport.compare_log("parabolic_step", log_or_neginf(left), log_rhs, rtol,
                                   instance={"center": g.ids[x], "R": [R1, R2, R3], "T": [T1, T2, T3],
                                             "p": p, "n": n, "C_S": C_S, **sample.recipe})


# --- space-time iteration ----------------------------------------------------

def check_spacetime_iteration(sample: SolutionSample, rho, x: int, R: float, T: float, delta: float,
                              n: float, d: float, S: float, C_D: float, C_S: float, certified: bool,
                              rtol: float = 1e-8) -> CheckReport:
    """Averaged l^{2 alpha^K} norm on the half cylinder against the l^2 norm on the full one."""
    K = geo.K_iterations(R, S)
    if not certified:
        raise HypothesisError("spacetime_iteration: SV(R/2, R) not certified")
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    _require_window(sample, T - R * R, T + R * R)
    g = sample.graph
    a = 1 + 2 / n
    e = a**K
    m = g.m
    Bh = _ball_mask(g, rho, x, R / 2)
    Bf = _ball_mask(g, rho, x, R)
    mh, mf = m[Bh] / m[Bh].sum(), m[Bf] / m[Bf].sum()
    w = delta * (R / 2) ** 2
    left = integrate(lambda t: float(np.sum(mh * sample.value(t)[Bh] ** (2 * e))), T - w, T + w, rtol) / (2 * w)
    W = delta * R * R
    right = integrate(lambda t: float(np.sum(mf * sample.value(t)[Bf] ** 2)), T - W, T + W, rtol)
    h = h_omega(g, sample.omega)
    log_rhs = (bd.log_C_dn(C_D, C_S, n, d) + (n / 2 + 1) * math.log1p(delta * R * R * h)
               - (n / 2 + 1) * math.log(delta) - 2 * math.log(R) + log_or_neginf(right))
    return CheckReport.compare_log("spacetime_iteration", log_or_neginf(left) / e, log_rhs, rtol,
                                   instance={"center": g.ids[x], "R": R, "K": K, "T": T, "delta": delta,
                                             "n": n, "d": d, **sample.recipe})
