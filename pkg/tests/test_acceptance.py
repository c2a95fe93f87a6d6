"""Acceptance criteria 1-13.  Each test prints one PASS/FAIL line with its measured values."""
import math
import os
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.optimize import brentq

from hklab import bounds as bd
from hklab import geometry as geo
from hklab import metric as mt
from hklab import semigroup as sg
from hklab import zoo
from hklab.cli import EXIT_OK, main
from hklab.graph import WeightedGraph
from hklab.lab import Job, run_job, run_jobs
from hklab.report import read_csv

ROOT = Path(__file__).resolve().parents[1]
SCENARIO = ROOT / "scenarios" / "normalized_cycle.json"


@pytest.fixture
def verdict(capsys):
    def emit(n: int, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\nCRITERION {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail
    return emit


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def test_c01_two_vertex_closed_form(verdict):
    g = WeightedGraph.from_edges(["x", "y"], [("x", "y", 1.0)], [1.0, 1.0])
    hs = sg.build(g)
    err = max(abs(sg.heat_kernel(hs, t)[0, 1] - (1 - math.exp(-2 * t)) / 2) for t in (0.1, 1.0, 10.0))
    verdict(1, err <= 1e-10, f"max |p_t(x,y) - (1 - e^-2t)/2| = {err:.2e} (tol 1e-10)")


def _ten_graphs():
    return [
        zoo.cycle(300, measure="normalizing"),
        zoo.cycle(50),
        zoo.path(40, measure="normalizing"),
        zoo.lattice_box(10, 10),
        zoo.lattice_box(6, 6, measure="normalizing"),
        zoo.complete(20),
        zoo.random_weighted(60, edge_prob=0.1, seed=1),
        zoo.random_weighted(120, edge_prob=0.05, weight_dist="lognormal", seed=2),
        zoo.antitree(1.0, 10),
        zoo.antitree(0.5, 20),
    ]


def test_c02_semigroup_laws(verdict):
    grid = (0.1, 1.0, 10.0)
    sym = mass = ck = 0.0
    graphs = _ten_graphs()
    for g in graphs:
        assert g.n <= 300 and not g.dirichlet
        hs = sg.build(g)
        for t in grid:
            p = sg.heat_kernel(hs, t)
            sym = max(sym, np.abs(p - p.T).max())
            mass = max(mass, np.abs(p @ g.m - 1).max())
            for s in grid:
                lhs = sg.heat_kernel(hs, t + s)
                rhs = (p * g.m[None, :]) @ sg.heat_kernel(hs, s)
                ck = max(ck, np.abs(lhs - rhs).max())
    ok = sym <= 1e-12 and mass <= 1e-9 and ck <= 1e-9
    verdict(2, ok, f"{len(graphs)} graphs: symmetry {sym:.1e} (1e-12), completeness {mass:.1e} (1e-9), "
                   f"Chapman-Kolmogorov {ck:.1e} (1e-9)")


def _suite(statement, seeds):
    reps = run_jobs([Job(statement, s) for s in seeds], n_jobs=os.cpu_count())
    bad = [r for r in reps if not r.ok]
    return reps, bad


def test_c03_integrated_maximum_principle(verdict):
    (reps, bad), dt = _timed(lambda: _suite("integrated_max_principle", range(100)))
    verdict(3, len(reps) == 100 and not bad, f"{len(reps)} instances, {len(bad)} violations, {dt:.1f}s")


def test_c04_elementary_inequalities(verdict):
    (reps, bad), dt = _timed(lambda: (run_job(Job("elementary", 0)), None))
    bad = [r for r in reps if not r.ok]
    draws = {r.instance["draws"] for r in reps}
    worst = max(r.lhs for r in reps)
    verdict(4, draws == {100_000} and not bad,
            f"{len(reps)} (inequality, p) groups of 1e5 draws, worst scaled residual {worst:.2e} (tol 1e-12), {dt:.1f}s")


def test_c05_caccioppoli(verdict):
    (reps, bad), dt = _timed(lambda: _suite("caccioppoli", range(50)))
    seeds = {r.instance["seed"] for r in reps}
    verdict(5, len(seeds) == 50 and not bad,
            f"{len(seeds)} instances ({len(reps)} time points), min margin {min(r.margin for r in reps):.3e}, {dt:.1f}s")


def test_c06_interpolation_and_supersolution(verdict):
    (interp, bad1), dt1 = _timed(lambda: _suite("interpolation", [0]))
    (sup, bad2), dt2 = _timed(lambda: _suite("supersolution_maximal", range(30)))
    ok = not bad1 and not bad2 and len(sup) == 30
    verdict(6, ok, f"interpolation 1e4 draws: {len(bad1)} violations; supersolution maximal {len(sup)} instances: "
                   f"{len(bad2)} violations; {dt1 + dt2:.1f}s")


def test_c07_zeta_asymptotics(verdict):
    ratio = bd.zeta(1.0, 100.0, 1.0) * 200
    zeros = [bd.zeta(0.0, t, S) for t in (1e-3, 1.0, 1e6) for S in (0.3, 1.0, 2.0)]
    ok = abs(ratio - 1) <= 0.01 and all(z == 0.0 for z in zeros)
    verdict(7, ok, f"zeta_1(1,100)*200 = {ratio:.6f}; zeta_S(0,t) exactly 0 on {len(zeros)} points: "
                   f"{all(z == 0.0 for z in zeros)}")


def test_c08_polynomial_correction(verdict):
    r = np.concatenate([[0.0], np.geomspace(1e-3, 1e4, 99)])
    t = np.geomspace(1e-3, 1e4, 100)
    R, T = np.meshgrid(r, t)
    viol = 0
    for n in (3, 4):
        lhs = bd.poly_correction(R, T, 1.0, n)
        rhs = np.maximum(1.0, R**2 / T) ** (n / 2)
        viol += int(np.sum(lhs > rhs))
    verdict(8, viol == 0, f"100x100 grid, n in {{3, 4}}: {viol} violations")


def test_c09_davies_optimizer(verdict):
    errs = []
    for th in (0.1, 1.0, 10.0):
        # numerical argmin of the convex f(., theta) as the root of its derivative
        eta = brentq(lambda e: -1 + math.sinh(e) / th, 0.0, 20.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        errs.append(abs(eta - bd.arsinh(th)))
    ident = 0.0
    for S in (0.5, 1.0, 2.0):
        for r in np.geomspace(1e-2, 1e3, 25):
            for T in np.geomspace(1e-2, 1e4, 25):
                z = bd.zeta(r, 2 * T, S)
                val = r / S * bd.davies_F(r * S / (2 * T)) + z
                ident = max(ident, abs(val) / max(1.0, abs(z)))
    ok = max(errs) <= 1e-8 and ident <= 1e-10
    verdict(9, ok, f"|argmin - arsinh(theta)| max {max(errs):.1e} (1e-8); "
                   f"(r/S)F + zeta residual max {ident:.1e} (1e-10, relative to 1 v zeta)")


def _pipeline(out: Path):
    return main(["verify", "--scenario", str(SCENARIO), "--out", str(out), "--jobs", str(os.cpu_count() or 1)])


@pytest.fixture(scope="module")
def c10_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("c10") / "run"
    rc, dt = _timed(lambda: _pipeline(out))
    return out, rc, dt


@pytest.mark.slow
def test_c10_end_to_end_normalized_cycle(verdict, c10_run):
    out, rc, dt = c10_run
    rows = read_csv(out / "checks.csv")
    final = [r for r in rows if r["statement"] == "final_theorem"]
    statuses = [r["status"] for r in final]
    bounds = read_csv(out / "bounds.csv")
    certs = read_csv(out / "certify.csv")
    margins = [float(r["log_margin"]) for r in bounds]
    n_centers = len(certs)
    pairs = n_centers * (n_centers + 1) // 2
    ok = (rc == EXIT_OK and n_centers == 20 and len(final) == pairs * 20
          and all(s in ("pass", "vacuous-pass") for s in statuses) and dt < 600)
    verdict(10, ok, f"exit {rc}; {n_centers} certified centers, {len(final)} (pair, t) points; "
                    f"pass {statuses.count('pass')}, vacuous-pass {statuses.count('vacuous-pass')}, "
                    f"other {len(statuses) - statuses.count('pass') - statuses.count('vacuous-pass')}; "
                    f"log-margin range [{min(margins):.1f}, {max(margins):.1f}]; {dt:.0f}s (limit 600s)")


def test_c11_antitree_dimension(verdict):
    g = zoo.antitree(1.0, 40)
    rho = mt.default_intrinsic_metric(g).rho
    d = zoo.antitree_dimension(1.0)
    slope, lo, hi = geo.volume_slope(g, rho, g.idx("0:0"))
    ok = abs(slope - d) <= 0.15 * d
    verdict(11, ok, f"gamma=1, K=40: log-log volume slope {slope:.3f} over radii [{lo:.2f}, {hi:.2f}], "
                    f"target {d:g} +-15%")


def test_c12_theta_decay(verdict):
    vals = []
    for S in (0.5, 1.0, 2.0):
        params = geo.Params(3, 1)
        rate = geo.theta_rate(params.beta, S)
        for r in np.geomspace(16 * S, 1e4 * S, 400):
            _, th = geo.kappa_theta(r, S, params.beta)
            vals.append(th * math.exp(rate * math.sqrt(r)))
    c1, c2 = min(vals), max(vals)
    ok = 0 < c1 <= c2 < math.inf
    verdict(12, ok, f"theta(r) e^(gamma sqrt r) over r in [16S, 1e4 S], S in {{0.5, 1, 2}}: "
                    f"c1 = {c1:.6f}, c2 = {c2:.6f}")


def _bodies(d: Path):
    return {name: [ln for ln in (d / name).read_text().splitlines() if not ln.startswith("#")]
            for name in ("certify.csv", "checks.csv", "bounds.csv")}


@pytest.mark.slow
def test_c13_determinism(verdict, c10_run, tmp_path):
    first, rc1, _ = c10_run
    rc2 = _pipeline(tmp_path / "rerun")
    a, b = _bodies(first), _bodies(tmp_path / "rerun")
    same = {k: a[k] == b[k] for k in a}
    ok = rc1 == rc2 == EXIT_OK and all(same.values())
    verdict(13, ok, "byte-identical CSV bodies on rerun: " + ", ".join(f"{k} {v}" for k, v in same.items()))


def test_antitree_slope_converges_with_depth():
    """Radial reduction of the antitree volume profile; the slope approaches d = 4 as K grows."""
    def radial(gamma, K):
        s = np.array(zoo.sphere_sizes(gamma, K), float)
        deg = np.zeros(K)
        deg[1:] += s[:-1]
        deg[:-1] += s[1:]
        ell = np.minimum(1.0, np.sqrt(np.minimum(1 / deg[:-1], 1 / deg[1:])))
        r = np.concatenate([[0.0], np.cumsum(ell)])
        vol = np.cumsum(s)
        sel = r >= r[-1] / 10 * (1 - 1e-12)
        return np.polyfit(np.log(r[sel]), np.log(vol[sel]), 1)[0]

    g = zoo.antitree(1.0, 40)
    rho = mt.default_intrinsic_metric(g).rho
    assert radial(1.0, 40) == pytest.approx(geo.volume_slope(g, rho, g.idx("0:0"))[0], rel=1e-12)
    slopes = [radial(1.0, K) for K in (40, 400, 4000)]
    assert slopes[0] < slopes[1] < slopes[2]
    assert abs(slopes[2] - 4) <= 0.15 * 4
