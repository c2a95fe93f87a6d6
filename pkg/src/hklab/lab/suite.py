"""Registry of seeded random-instance runners and a deterministic parallel executor."""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .. import geometry as geo
from .. import metric as mt
from .. import semigroup as sg
from .. import zoo
from ..graph import LipschitzWeight, combinatorial_interior
from ..report import CheckReport
from . import davies as dv
from . import meanvalue as mv
from . import space
from . import timeiter as ti
from .common import HypothesisError
from .samples import SolutionSample, lipschitz_weight, random_nonneg


# --- shared fixtures ---------------------------------------------------------

@lru_cache(maxsize=16)
def _fixture(name: str, size: int):
    """(graph, heat system, intrinsic metric rho, jump size S) for a named zoo family."""
    if name == "cycle":
        g = zoo.cycle(size, measure="normalizing")
    elif name == "cycle_counting":
        g = zoo.cycle(size)
    elif name == "path":
        g = zoo.path(size, measure="normalizing")
    elif name == "lattice":
        g = zoo.lattice_box(size, size)
    elif name == "complete":
        g = zoo.complete(size)
    elif name.startswith("random"):
        g = zoo.random_weighted(size, edge_prob=0.3, seed=int(name[6:] or 0))
    else:
        raise ValueError(f"unknown fixture {name!r}")
    met = mt.default_intrinsic_metric(g)
    return g, sg.build(g), met.rho, met.S


def _small_fixture(rng, max_n: int = 40):
    kind = ["cycle", "path", "lattice", "complete", "random", "cycle_counting"][int(rng.integers(6))]
    if kind == "lattice":
        size = int(rng.integers(3, int(math.isqrt(max_n)) + 1))
    elif kind == "complete":
        size = int(rng.integers(3, 9))
    elif kind == "random":
        size = int(rng.integers(6, max_n + 1))
        return (f"random{int(rng.integers(1000))}", size), _fixture(f"random{int(rng.integers(1000))}", size)
    else:
        size = int(rng.integers(5, max_n + 1))
    return (kind, size), _fixture(kind, size)


def _random_omega(rng, rho, S):
    kappa = float(rng.uniform(0, 1.5)) / S
    center = int(rng.integers(rho.shape[0]))
    cap = float(rng.uniform(0.5, 1.0) * rho[center].max())
    if kappa > 0:
        # keep e^omega within a few orders of magnitude so spectral audits stay above roundoff
        cap = min(cap, 6.0 / kappa)
    sign = 1.0 if rng.random() < 0.5 else -1.0
    return lipschitz_weight(rho, kappa, center, cap, sign), kappa


@lru_cache(maxsize=32)
def _sv(name: str, size: int, x: int, R1: float, R2: float, n: float, d: float):
    g, _, rho, _ = _fixture(name, size)
    return geo.sv_check(g, rho, x, R1, R2, n, d)


def _recipe(fixture, seed, **extra):
    return {"graph": f"{fixture[0]}({fixture[1]})", "seed": seed, **extra}


# --- runners -------------------------------------------------------------------

def run_elementary(seed: int) -> list[CheckReport]:
    return space.check_elementary(sample_count=100_000, seed=seed)


def run_pointwise_claim(seed: int) -> list[CheckReport]:
    return space.check_pointwise_claim_random(draws=10_000, seed=seed)


def run_integrated_max_principle(seed: int) -> list[CheckReport]:
    rng = np.random.default_rng(seed)
    fx, (g, hs, rho, S) = _small_fixture(rng, 30)
    omega, kappa = _random_omega(rng, rho, S)
    f = random_nonneg(rng, g.n)
    grid = np.linspace(0, float(rng.uniform(1, 20)), 50)
    r = sg.phi_monotone(hs, rho, S, LipschitzWeight(omega, kappa), f, grid)
    r.instance.update(_recipe(fx, seed))
    return [r]


def run_caccioppoli(seed: int) -> list[CheckReport]:
    rng = np.random.default_rng(seed)
    fx, (g, hs, rho, S) = _small_fixture(rng, 40)
    omega, _ = _random_omega(rng, rho, S)
    x = int(rng.integers(g.n))
    B = mt.ball(rho, x, float(rng.uniform(1, 4)) * S)
    inner = sorted(combinatorial_interior(g, B.tolist()))
    if not inner:
        B = np.arange(g.n)
        inner = sorted(combinatorial_interior(g, B.tolist()))
    phi = np.zeros(g.n)
    phi[inner] = rng.uniform(0.2, 1.0, len(inner))
    p = float(rng.choice([1.0, 2.0, 3.0]))
    f = random_nonneg(rng, g.n)
    sample = SolutionSample(hs, omega, f, kind="subsolution", interval=(0.0, 4.0),
                            recipe=_recipe(fx, seed))
    sample.audit()
    return space.check_caccioppoli(sample, phi, B, p, times=np.geomspace(0.05, 4.0, 5))


def run_maximal_subsolution(seed: int) -> list[CheckReport]:
    rng = np.random.default_rng(seed)
    fx = ("cycle", 60)
    g, hs, rho, S = _fixture(*fx)
    omega, _ = _random_omega(rng, rho, S)
    x = int(rng.integers(g.n))
    f = np.zeros(g.n)
    f[int(rng.integers(g.n))] = 1.0
    R1 = float(rng.integers(2, 10))
    R2 = R1 + S + float(rng.integers(1, 8))
    T1 = float(rng.uniform(0.5, 5))
    T2 = T1 + float(rng.uniform(0.5, 20))
    T3 = T2 + float(rng.uniform(0.5, 20))
    p = float(rng.choice([1.0, 1.5, 2.0]))
    sample = SolutionSample(hs, omega, f, interval=(T1, T3), recipe=_recipe(fx, seed))
    sample.audit()
    return [space.check_maximal_subsolution(sample, rho, x, R1, R2, T1, T2, T3, p, S)]


def run_parabolic_step(seed: int) -> list[CheckReport]:
    rng = np.random.default_rng(seed)
    fx = ("cycle", 60)
    g, hs, rho, S = _fixture(*fx)
    n = 3.0
    x = int(rng.integers(g.n))
    R1 = float(rng.integers(1, 6))
    R2 = R1 + S + float(rng.integers(1, 6))
    R3 = R2 + S + float(rng.integers(1, 6))
    est = geo.sobolev_constant(g, rho, x, R2, n)
    omega, _ = _random_omega(rng, rho, S)
    f = random_nonneg(rng, g.n)
    T1 = float(rng.uniform(0.1, 2))
    T2 = T1 + float(rng.uniform(0.5, 10))
    T3 = T2 + float(rng.uniform(0.5, 10))
    p = float(rng.choice([1.0, 2.0]))
    sample = SolutionSample(hs, omega, f, interval=(T1, T3), recipe=_recipe(fx, seed))
    sample.audit()
    return [space.check_parabolic_step(sample, rho, x, R1, R2, R3, T1, T2, T3, p, n, S, est.C_S,
                                       est.converged)]


def _c300_solution(rng, R, seed, kappa_scale=0.02):
    fx = ("cycle", 300)
    g, hs, rho, S = _fixture(*fx)
    x = int(rng.integers(g.n))
    kappa = float(rng.uniform(0, kappa_scale))
    omega = lipschitz_weight(rho, kappa, int(rng.integers(g.n)), sign=float(rng.choice([-1.0, 1.0])))
    f = random_nonneg(rng, g.n, density=0.05)
    T = float(R * R * rng.uniform(1.0, 2.0))
    sample = SolutionSample(hs, omega, f, interval=(T - R * R, T + R * R), recipe=_recipe(fx, seed, kappa=kappa))
    sample.audit()
    return fx, g, rho, S, x, T, sample


def run_spacetime_iteration(seed: int) -> list[CheckReport]:
    rng = np.random.default_rng(seed)
    R, n, d = 72.0, 3.0, 1.0
    fx, g, rho, S, x, T, sample = _c300_solution(rng, R, seed)
    sv = _sv(*fx, x, R / 2, R, n, d)
    delta = float(rng.uniform(0.2, 1.0))
    return [space.check_spacetime_iteration(sample, rho, x, R, T, delta, n, d, S, sv.C_D, sv.C_S,
                                            sv.converged and sv.passed)]


def run_mv2(seed: int) -> list[CheckReport]:
    rng = np.random.default_rng(seed)
    params = geo.Params(3.0, 1.0, math.inf)
    R = 72.0
    fx, g, rho, S, x, T, sample = _c300_solution(rng, R, seed)
    sv = _sv(*fx, x, R / 2, R, params.n, params.d)
    tau = float(rng.uniform(0.2, 1.0))
    return mv.check_mv2(sample, rho, x, R, tau, T, params, S, sv.C_D, sv.C_S, sv.converged and sv.passed)


def run_interpolation(seed: int) -> list[CheckReport]:
    return ti.check_interpolation_random(draws=10_000, seed=seed)


def _iteration_sample(rng, seed, kind="subsolution"):
    fx, (g, hs, rho, S) = _small_fixture(rng, 30)
    omega, _ = _random_omega(rng, rho, S)
    f = random_nonneg(rng, g.n)
    force = random_nonneg(rng, g.n) * float(rng.uniform(0, 2)) if kind == "supersolution" else None
    sample = SolutionSample(hs, omega, f, kind=kind, force=force, interval=(0.0, 10.0),
                            recipe=_recipe(fx, seed))
    sample.audit()
    dom = np.asarray(sample.domain)
    B = np.sort(rng.choice(dom, size=int(rng.integers(1, dom.size + 1)), replace=False))
    mu = g.m[B] if rng.random() < 0.5 else np.exp(rng.uniform(-2, 2, B.size))
    return sample, B, mu


def _random_p(rng):
    return math.inf if rng.random() < 0.3 else float(np.exp(rng.uniform(0.05, 2.5)))


def run_supersolution_maximal(seed: int) -> list[CheckReport]:
    rng = np.random.default_rng(seed)
    sample, B, mu = _iteration_sample(rng, seed, "supersolution")
    T = np.sort(rng.uniform(0, 10, 4))
    s = 1.0 if rng.random() < 0.2 else float(rng.uniform(1, 4))
    return [ti.check_supersolution_maximal(sample, B, mu, *T, s, _random_p(rng))]


def run_time_iteration_step(seed: int) -> list[CheckReport]:
    rng = np.random.default_rng(seed)
    sample, B, mu = _iteration_sample(rng, seed)
    T = np.sort(rng.uniform(0, 10, 4))
    p = _random_p(rng)
    q = ti.conjugate(p)
    beta = 1 + float(rng.uniform(0.05, 0.95)) / q
    return [ti.check_time_iteration_step(sample, B, mu, *T, float(rng.uniform(1, 3)), p, beta)]


def run_time_iteration(seed: int) -> list[CheckReport]:
    rng = np.random.default_rng(seed)
    sample, B, mu = _iteration_sample(rng, seed)
    p = _random_p(rng)
    q = ti.conjugate(p)
    beta = 1.5 if p == math.inf else 1 + float(rng.uniform(0.05, 0.95)) / q
    delta = float(rng.uniform(0.1, 0.9))
    T = float(rng.uniform(0.5, 10 / (1 + delta)))
    return [ti.check_time_iteration(sample, B, mu, T, delta, p, beta, int(rng.integers(0, 6)))]


def run_davies_abstract(seed: int) -> list[CheckReport]:
    rng = np.random.default_rng(seed)
    fx, (g, hs, rho, S) = _small_fixture(rng, 20)
    x1, x2 = (int(v) for v in rng.choice(g.n, size=2, replace=False))
    T = float(rng.uniform(0.5, 5))
    d = float(rng.uniform(0.1, 0.9)) * T
    kappas = tuple(float(k) for k in np.linspace(0, 2.0 / S, 9))
    r = dv.check_davies_abstract(hs, rho, x1, x2, T, (T - d, T - d), (T + d, T + d), kappas, seed=seed)
    r.instance.update(_recipe(fx, seed))
    return [r]


RUNNERS = {
    "elementary": run_elementary,
    "pointwise_claim": run_pointwise_claim,
    "integrated_max_principle": run_integrated_max_principle,
    "caccioppoli": run_caccioppoli,
    "maximal_subsolution": run_maximal_subsolution,
    "parabolic_step": run_parabolic_step,
    "spacetime_iteration": run_spacetime_iteration,
    "interpolation": run_interpolation,
    "supersolution_maximal": run_supersolution_maximal,
    "time_iteration_step": run_time_iteration_step,
    "time_iteration": run_time_iteration,
    "mv2": run_mv2,
    "davies_abstract": run_davies_abstract,
}

# instances per statement in the default suite
DEFAULT_COUNTS = {
    "elementary": 1, "pointwise_claim": 1, "integrated_max_principle": 100, "caccioppoli": 50,
    "maximal_subsolution": 20, "parabolic_step": 10, "spacetime_iteration": 1, "interpolation": 1,
    "supersolution_maximal": 30, "time_iteration_step": 20, "time_iteration": 20, "mv2": 1,
    "davies_abstract": 10,
}


@dataclass(frozen=True)
class Job:
    statement: str
    seed: int


def default_jobs(statements=None, seed: int = 0) -> list[Job]:
    statements = list(RUNNERS) if statements is None else list(statements)
    jobs = []
    for s in statements:
        if s not in RUNNERS:
            raise KeyError(f"unknown statement id {s!r}")
        jobs += [Job(s, seed + i) for i in range(DEFAULT_COUNTS[s])]
    return jobs


def run_job(job: Job) -> list[CheckReport]:
    """Run one job; hypothesis failures become ``uncertified`` reports, other errors ``error``."""
    inst = {"seed": job.seed}
    try:
        reports = RUNNERS[job.statement](job.seed)
    except HypothesisError as exc:
        return [CheckReport.skipped(job.statement, str(exc), inst, status="uncertified")]
    except (ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        return [CheckReport.skipped(job.statement, f"{type(exc).__name__}: {exc}", inst, status="error")]
    for r in reports:
        r.instance.setdefault("seed", job.seed)
    return reports


def run_jobs(jobs, n_jobs: int | None = None) -> list[CheckReport]:
    """Execute jobs, in parallel when ``n_jobs`` > 1; reports come back in job order."""
    jobs = list(jobs)
    n_jobs = n_jobs or os.cpu_count() or 1
    if n_jobs <= 1 or len(jobs) <= 1:
        results = [run_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(run_job, jobs))
    return [r for batch in results for r in batch]
