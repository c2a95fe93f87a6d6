import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad_vec

from hklab import geometry as geo
from hklab import metric as mt
from hklab import semigroup as sg
from hklab import zoo
from hklab.graph import combinatorial_interior
from hklab.lab import HypothesisError, Job, SampleError, SolutionSample, random_nonneg, run_job
from hklab.lab import davies as dv
from hklab.lab import meanvalue as mv
from hklab.lab import space
from hklab.lab import suite
from hklab.lab import timeiter as ti
from hklab.lab.common import mu_norm, time_max
from hklab.lab.quadrature import integrate


@pytest.fixture(scope="module")
def path12():
    g = zoo.path(12, measure="normalizing")
    met = mt.default_intrinsic_metric(g)
    return g, sg.build(g), met.rho, met.S


# --- numerics ----------------------------------------------------------------

def test_quadrature_analytic():
    assert integrate(np.sin, 0, math.pi) == pytest.approx(2.0, rel=1e-12)
    # sharp transient near the left end of a long window
    assert integrate(lambda t: math.exp(-t), 0, 10368) == pytest.approx(1.0, rel=1e-9)
    vec = integrate(lambda t: np.array([t, t * t]), 0, 3)
    np.testing.assert_allclose(vec, [4.5, 9.0], rtol=1e-12)
    assert integrate(np.cos, 1.0, 1.0) == 0.0
    with pytest.raises(ValueError):
        integrate(np.cos, 1.0, 0.0)


def test_quadrature_gives_up():
    with pytest.raises(RuntimeError):
        integrate(lambda t: 1.0 / math.sqrt(abs(t - 0.3)) if t != 0.3 else 0.0, 0, 1, rtol=1e-14,
                  max_panels=8)


def test_time_max_refines_between_nodes():
    val, arg = time_max(lambda t: -(t - 0.123456) ** 2, 0, 1, n=9)
    assert arg == pytest.approx(0.123456, abs=1e-6)
    assert val == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(p=st.floats(1.0, 2000.0), seed=st.integers(0, 1000))
def test_mu_norm_matches_direct(p, seed):
    rng = np.random.default_rng(seed)
    v, mu = rng.random(6), rng.uniform(0.1, 2, 6)
    want = float(np.sum(mu * v**p)) ** (1 / p) if p < 200 else None
    got = mu_norm(v, mu, p)
    if want is not None and want > 0:
        assert got == pytest.approx(want, rel=1e-10)
    assert math.isfinite(got)
    assert mu_norm(v, mu, math.inf) == v.max()


# --- samples -------------------------------------------------------------------

def test_sample_audits(path12, rng):
    g, hs, rho, S = path12
    omega = 0.3 * rho[0]
    s = SolutionSample(hs, omega, random_nonneg(rng, g.n), interval=(0.0, 5.0))
    assert s.audit() <= 1e-7
    assert s.fd_audit(1.0) < 1e-6
    sup = SolutionSample(hs, omega, random_nonneg(rng, g.n), kind="supersolution",
                         force=np.ones(g.n), interval=(0.0, 5.0))
    assert sup.audit() <= 1e-7
    with pytest.raises(SampleError):
        SolutionSample(hs, omega, -np.ones(g.n))
    with pytest.raises(SampleError):
        SolutionSample(hs, omega, np.ones(g.n), force=np.ones(g.n))
    with pytest.raises(SampleError):
        SolutionSample(hs, omega, np.ones(g.n), kind="weird")


def test_sample_residual_vanishes_for_solutions(path12, rng):
    g, hs, rho, S = path12
    s = SolutionSample(hs, -0.2 * rho[5], random_nonneg(rng, g.n), interval=(0.0, 3.0))
    for t in (0.1, 1.0, 3.0):
        scale = np.abs(s.derivative(t)).max()
        assert np.abs(s.residual(t)).max() <= 1e-10 * scale


# --- space-time statements ---------------------------------------------------------

def test_elementary_suite_passes():
    reps = space.check_elementary(sample_count=20_000, seed=1)
    assert reps and all(r.passed for r in reps)


def test_elementary_detects_p_out_of_range():
    # inequality 2 requires p >= 1; at p = 0.6 it is violated for some pair
    a = np.linspace(0.01, 3, 300)
    b = np.full_like(a, 1.0)
    assert space.elementary_violation(2, a, b, 0.6).max() > 1e-6


def test_pointwise_claim_random():
    assert all(r.passed for r in space.check_pointwise_claim_random(draws=2000, seed=4))


def test_caccioppoli_zero_solution_and_support(path12):
    g, hs, rho, S = path12
    s = SolutionSample(hs, np.zeros(g.n), np.zeros(g.n), kind="subsolution", interval=(0.0, 1.0))
    B = list(range(2, 9))
    inner = sorted(combinatorial_interior(g, B))
    phi = np.zeros(g.n)
    phi[inner] = 1.0
    reps = space.check_caccioppoli(s, phi, B, 2.0, [0.5])
    assert reps[0].lhs == 0.0 and reps[0].rhs == 0.0 and reps[0].passed
    bad = phi.copy()
    bad[B[0]] = 0.5
    with pytest.raises(ValueError):
        space.check_caccioppoli(s, bad, B, 2.0, [0.5])
    with pytest.raises(ValueError):
        space.check_caccioppoli(s, phi, B, 0.5, [0.5])


def test_caccioppoli_random_instances():
    for seed in range(5):
        assert all(r.ok for r in run_job(Job("caccioppoli", seed)))


# --- time iteration ------------------------------------------------------------

@settings(max_examples=100, deadline=None)
@given(mu=st.floats(1e-3, 1e3), v=st.floats(0, 1e3), p=st.one_of(st.just(math.inf), st.floats(1.0, 50.0)))
def test_interpolation_singleton_is_equality(mu, v, p):
    r = ti.check_interpolation([mu], [v], p)
    assert r.passed
    assert r.rhs == pytest.approx(v, rel=1e-12, abs=1e-300)


def test_interpolation_p_infinity():
    mu = np.array([0.5, 2.0, 4.0])
    v = np.array([1.0, 3.0, 0.2])
    r = ti.check_interpolation(mu, v, math.inf)
    # ||1/mu||_inf ||v||_1 = 2 * (0.5 + 6 + 0.8)
    assert r.rhs == pytest.approx(2 * 7.3, rel=1e-14)
    assert r.passed
    with pytest.raises(ValueError):
        ti.check_interpolation([0.0, 1.0], [1, 1], 2.0)


def test_supersolution_constant_function():
    g = zoo.cycle(10, measure="normalizing")
    hs = sg.build(g)
    s = SolutionSample(hs, np.zeros(g.n), np.ones(g.n), kind="supersolution", interval=(0.0, 4.0))
    B = np.arange(4)
    mu = g.m[B]
    r = ti.check_supersolution_maximal(s, B, mu, 0.0, 1.0, 2.0, 4.0, 1.0, 2.0)
    assert r.lhs == pytest.approx(mu.sum(), rel=1e-12)
    # (mu(B)^{1/2}/2 + ||Deg||_2) * 4 * mu(B)^{1/2}
    M = mu.sum()
    assert r.rhs == pytest.approx((math.sqrt(M) / 2 + math.sqrt(M)) * 4 * math.sqrt(M), rel=1e-7)
    assert r.passed


def test_beta_range_enforced(path12, rng):
    g, hs, rho, S = path12
    s = SolutionSample(hs, np.zeros(g.n), random_nonneg(rng, g.n), interval=(0.0, 4.0))
    B = np.arange(2, 6)
    with pytest.raises(ValueError):
        ti.check_time_iteration_step(s, B, g.m[B], 0, 1, 2, 3, 1.0, 2.0, beta=1.5)
    with pytest.raises(ValueError):
        ti.check_time_iteration(s, B, g.m[B], 1.0, 0.5, 2.0, 1.0, 1)
    r = ti.check_time_iteration(s, B, g.m[B], 1.0, 0.5, 2.0, 1.4, 2)
    assert r.ok


def test_log_G_formula():
    from hklab import bounds as bd
    beta, k = 1.25, 3
    inner = (max(1.0, 2.0) + 0.5 * 4.0 * 3.0) * 0.7**2.0
    want = bd.log_C_beta(beta) + math.log(inner) / beta**k
    assert ti.log_G(2.0, 3.0, 0.7, 2.0, 0.5, 4.0, beta, k) == pytest.approx(want, rel=1e-14)


def test_time_iteration_runners():
    for stmt in ("supersolution_maximal", "time_iteration_step", "time_iteration", "interpolation"):
        for seed in range(3):
            assert all(r.ok for r in run_job(Job(stmt, seed))), stmt


# --- mean value ------------------------------------------------------------------

def test_mv2_guards(c300, rng):
    g, hs, rho, S = c300
    params = geo.Params(3, 1)
    s = SolutionSample(hs, np.zeros(g.n), random_nonneg(rng, g.n), interval=(0.0, 20000.0))
    with pytest.raises(ValueError):
        mv.check_mv2(s, rho, 0, 50.0, 0.5, 10000.0, params, S, 2.0, 2.0, True)
    with pytest.raises(HypothesisError):
        mv.check_mv2(s, rho, 0, 72.0, 0.5, 10000.0, params, S, 2.0, 2.0, False)


def test_mv2_pivot():
    params = geo.Params(3, 1)
    assert geo.R0(1.0, 3, params.q) == pytest.approx(72.0)
    assert mv.pivot_report(72.0, 1.0, params).passed


# --- Davies ----------------------------------------------------------------------

def _quad_gram(hs, omega, a, b):
    """int_a^b (P_t^omega)^T diag(m) P_t^omega dt by adaptive vector quadrature."""
    m = hs.graph.m

    def f(t):
        P = sg.sandwiched_operator(hs, omega, t)
        return P.T @ (m[:, None] * P)
    return quad_vec(f, a, b, epsrel=1e-12, epsabs=0)[0]


def test_space_time_mass_against_quadrature(path12, rng):
    g, hs, rho, S = path12
    omega = 0.4 * np.minimum(rho[2], 6.0)
    f = rng.random(g.n)
    M = _quad_gram(hs, omega, 0.3, 2.5)
    assert dv.space_time_mass(hs, omega, f, 0.3, 2.5) == pytest.approx(f @ M @ f, rel=1e-9)


def test_sharp_phi_against_generalized_eigenproblem(path12):
    g, hs, rho, S = path12
    omega = dv.davies_weight(rho, 1, 9, 0.5)
    x, T, a, b = 1, 2.0, 1.0, 3.0
    M = _quad_gram(hs, omega, a, b)
    r = sg.sandwiched_operator(hs, omega, T)[x]
    # sup_f (r.f)^2 / f^T M f = r^T M^-1 r
    want = 1.0 / math.sqrt(r @ np.linalg.solve(M, r))
    assert dv.sharp_phi(hs, omega, x, T, a, b) == pytest.approx(want, rel=1e-7)


def test_davies_two_vertex(two_vertex):
    hs = sg.build(two_vertex)
    rho = mt.default_intrinsic_metric(two_vertex).rho
    r = dv.check_davies_abstract(hs, rho, 0, 1, 1.0, (0.5, 0.5), (1.5, 1.5), kappas=(0.0, 0.5, 1.0))
    assert r.passed
    assert r.lhs == pytest.approx(math.log((1 - math.exp(-4.0)) / 2), rel=1e-12)


def test_davies_weight_improves_far_apart(path12):
    g, hs, rho, S = path12
    r = dv.check_davies_abstract(hs, rho, 0, 11, 0.5, (0.25, 0.25), (0.75, 0.75),
                                 kappas=(0.0, 0.5, 1.0, 4.0))
    assert r.passed
    # kappa = 4 spans e^44 and cannot be certified; it is dropped, not fatal
    assert [d["kappa"] for d in r.instance["dropped"]] == [4.0]
    bounds = r.instance["bounds"]
    assert min(bounds.values()) < bounds["0.0"] - 1.0
    assert r.instance["kappa"] > 0


def test_davies_rejects_oversized_phi(path12):
    g, hs, rho, S = path12
    with pytest.raises(HypothesisError):
        dv.check_davies_abstract(hs, rho, 0, 5, 1.0, (0.5, 0.5), (1.5, 1.5),
                                 phi=lambda om, x, lo, hi: 10 * dv.sharp_phi(hs, om, x, 1.0, lo, hi))


# --- end to end ------------------------------------------------------------------

def _fake_centers(params, certified=True):
    return {i: dv.CenterCertificate(i, params, 42.0, 150.0, 3.0, 5.0, certified) for i in (0, 150)}


def test_final_theorem_negative_control(c300):
    g, hs, rho, S = c300
    params = geo.Params(3, 1)
    times = [14112.0, 100000.0]
    ok = dv.check_final_theorem(hs, rho, S, _fake_centers(params), [(0, 150)], times, variant="normalized")
    assert ok and all(r.ok for r in ok)
    bad = dv.check_final_theorem(hs, rho, S, _fake_centers(params), [(0, 150)], times, variant="normalized",
                                 log_shift=-1e4)
    assert all(r.status == "fail" for r in bad)


def test_final_theorem_uncertified(c300):
    g, hs, rho, S = c300
    params = geo.Params(3, 1)
    reps = dv.check_final_theorem(hs, rho, S, _fake_centers(params, certified=False), [(0, 150)], [20000.0])
    assert [r.status for r in reps] == ["uncertified"]
    assert not reps[0].ok


# --- suite plumbing --------------------------------------------------------------

def test_run_job_maps_exceptions(monkeypatch):
    def hyp(seed):
        raise HypothesisError("no certificate")

    def boom(seed):
        raise ValueError("bad input")

    monkeypatch.setitem(suite.RUNNERS, "hyp", hyp)
    monkeypatch.setitem(suite.RUNNERS, "boom", boom)
    assert run_job(Job("hyp", 0))[0].status == "uncertified"
    assert run_job(Job("boom", 0))[0].status == "error"
    with pytest.raises(KeyError):
        suite.default_jobs(["nope"])


def test_run_jobs_order_and_determinism():
    jobs = [Job("integrated_max_principle", s) for s in range(4)]
    a = suite.run_jobs(jobs, n_jobs=1)
    b = suite.run_jobs(jobs, n_jobs=2)
    assert [r.row() for r in a] == [r.row() for r in b]
    assert [r.instance["seed"] for r in a] == [0, 1, 2, 3]


def test_sandwiched_norm_stable_for_wide_weights(path12):
    g, hs, rho, S = path12
    omega = dv.davies_weight(rho, 0, 11, 4.0)
    ts = np.linspace(0.25, 0.26, 5)
    vals = np.array([sg.sandwiched_norm(hs, omega, t) for t in ts])
    # smooth, increasing and within the e^{h t} growth bound
    assert np.all(np.diff(vals) > 0)
    from hklab.graph import h_omega
    assert np.all(vals <= np.exp(h_omega(g, omega) * ts) * (1 + 1e-9))
