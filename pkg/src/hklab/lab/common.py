"""Helpers shared by the checks: time maxima, measure-space norms, hypothesis errors."""
from __future__ import annotations

import math

import numpy as np
from scipy.optimize import minimize_scalar

from ..bounds import HypothesisError  # noqa: F401  (re-exported)


def time_max(fn, a: float, b: float, n: int = 129) -> tuple[float, float]:
    """(max, argmax) of a scalar function of time on [a, b]: grid scan plus bounded refinement."""
    if b < a:
        raise ValueError("need a <= b")
    if b == a:
        return float(fn(a)), a
    ts = np.linspace(a, b, n)
    vals = np.array([fn(t) for t in ts])
    i = int(np.argmax(vals))
    best, arg = float(vals[i]), float(ts[i])
    lo, hi = ts[max(i - 1, 0)], ts[min(i + 1, n - 1)]
    if hi > lo:
        res = minimize_scalar(lambda t: -fn(t), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-10 * max(1.0, abs(hi))})
        if -res.fun > best:
            best, arg = float(-res.fun), float(res.x)
    return best, arg


def mu_norm(v, mu, p: float) -> float:
    """||v||_{l^p(B, mu)}; p = inf is the plain supremum."""
    v = np.abs(np.asarray(v, dtype=float))
    if p == math.inf:
        return float(v.max())
    top = v.max() if v.size else 0.0
    if top == 0:
        return 0.0
    # factor out the maximum so large p does not overflow
    return float(top * np.sum(mu * (v / top) ** p) ** (1.0 / p))


def conjugate(p: float) -> float:
    if p == 1:
        return math.inf
    if p == math.inf:
        return 1.0
    return p / (p - 1.0)


def log_or_neginf(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf
