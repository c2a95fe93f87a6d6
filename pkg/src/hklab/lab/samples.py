"""Test objects: exact solutions of the sandwiched heat equation and audited super-solutions.

A sample is ``v_t = P^omega_{t - t0} f + int_0^{t - t0} P^omega_s g ds`` with
``f, g >= 0``.  Without forcing it solves (d/dt + Delta_omega) v = 0; with
``g >= 0`` it is a super-solution.  Values and exact time derivatives come
from the spectral decomposition.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..graph import sandwiched_apply
from ..semigroup import HeatSystem

AUDIT_TOL = 1e-7
KINDS = ("solution", "subsolution", "supersolution")


class SampleError(ValueError):
    pass


@dataclass(eq=False)
class SolutionSample:
    hs: HeatSystem
    omega: np.ndarray
    f: np.ndarray
    kind: str = "solution"
    force: np.ndarray | None = None
    t0: float = 0.0
    interval: tuple[float, float] = (0.0, 1.0)
    domain: np.ndarray | None = None
    recipe: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SampleError(f"unknown kind {self.kind!r}")
        if not self.hs.dense:
            raise SampleError("samples need a dense spectral decomposition")
        g = self.hs.graph
        self.omega = np.asarray(self.omega, dtype=float)
        self.f = np.asarray(self.f, dtype=float)
        if np.any(self.f < 0):
            raise SampleError("initial datum must be nonnegative")
        if self.interval[0] < self.t0:
            raise SampleError("interval starts before the initial time")
        if self.domain is None:
            self.domain = g.interior
        self._w = np.exp(self.omega)
        self._c = self.hs.phi.T @ (g.m * self.f / self._w)
        if self.force is not None:
            self.force = np.asarray(self.force, dtype=float)
            if np.any(self.force < 0):
                raise SampleError("forcing must be nonnegative")
            if self.kind == "solution":
                raise SampleError("a forced sample is not a solution")
            self._cg = self.hs.phi.T @ (g.m * self.force / self._w)
        else:
            self._cg = None

    @property
    def graph(self):
        return self.hs.graph

    def _coef(self, t: float, order: int) -> np.ndarray:
        s = t - self.t0
        if s < -1e-12:
            raise SampleError(f"time {t} before the initial time {self.t0}")
        s = max(s, 0.0)
        lam = self.hs.eigenvalues
        E = np.exp(-s * lam)
        if order == 0:
            c = E * self._c
            if self._cg is not None:
                with np.errstate(divide="ignore", invalid="ignore"):
                    duh = np.where(lam > 0, -np.expm1(-s * lam) / np.where(lam > 0, lam, 1.0), s)
                c = c + duh * self._cg
            return c
        c = -lam * E * self._c
        if self._cg is not None:
            c = c + E * self._cg
        return c

    def value(self, t: float) -> np.ndarray:
        return np.clip(self._w * (self.hs.phi @ self._coef(t, 0)), 0.0, None)

    def raw_value(self, t: float) -> np.ndarray:
        return self._w * (self.hs.phi @ self._coef(t, 0))

    def derivative(self, t: float) -> np.ndarray:
        return self._w * (self.hs.phi @ self._coef(t, 1))

    def residual(self, t: float) -> np.ndarray:
        """(d/dt + Delta_omega) v_t."""
        return self.derivative(t) + sandwiched_apply(self.graph, self.omega, self.raw_value(t))

    def audit(self, n_times: int = 9, tol: float = AUDIT_TOL) -> float:
        """Worst signed violation of the defining inequality on the domain (<= 0 is good).

        Values are relative to the size of v and its derivative.  Raises
        SampleError when the violation exceeds ``tol`` or v is negative beyond
        roundoff.
        """
        worst = -np.inf
        for t in np.linspace(*self.interval, n_times):
            v = self.raw_value(t)
            scale = max(np.abs(v).max(), np.abs(self.derivative(t)).max(), 1e-300)
            if v.min() < -tol * scale:
                raise SampleError(f"sample negative at t={t}: {v.min()}")
            r = self.residual(t)[self.domain] / scale
            if self.kind == "solution":
                viol = np.abs(r).max()
            elif self.kind == "subsolution":
                viol = r.max()
            else:
                viol = (-r).max()
            worst = max(worst, float(viol))
        if worst > tol:
            raise SampleError(f"{self.kind} audit failed: violation {worst:.3e}")
        return worst

    def fd_audit(self, t: float, h: float | None = None) -> float:
        """Relative mismatch between the spectral derivative and a centered difference."""
        if h is None:
            h = 1e-5 * max(1.0, t)
        d = self.derivative(t)
        fd = (self.raw_value(t + h) - self.raw_value(t - h)) / (2 * h)
        return float(np.abs(fd - d).max() / max(np.abs(d).max(), np.abs(self.raw_value(t)).max(), 1e-300))


def lipschitz_weight(rho: np.ndarray, kappa: float, center: int, cap: float | None = None, sign: float = 1.0):
    """omega = sign * kappa * min(rho(center, .), cap); kappa-Lipschitz for any cap."""
    d = rho[center].copy()
    if cap is not None:
        d = np.minimum(d, cap)
    return sign * kappa * d


def random_nonneg(rng: np.random.Generator, n: int, density: float = 0.3) -> np.ndarray:
    f = rng.random(n) * (rng.random(n) < density)
    if not f.any():
        f[rng.integers(n)] = 1.0
    return f / np.linalg.norm(f)
