import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hklab import geometry as geo
from hklab import metric as mt
from hklab import zoo


def test_R0_normalized_cycle_value():
    # p = inf (q = 1), n = 3: R0 = 8S(0 + 3)^2 = 72 S
    assert geo.R0(1.0, 3.0, 1.0) == 72.0
    assert geo.R0(0.5, 3.0, 1.0) == 36.0


def test_params_derived_quantities():
    p = geo.Params(3, 1, "inf")
    assert p.q == 1.0 and p.alpha == pytest.approx(5 / 3) and p.beta == pytest.approx(4 / 3)
    p = geo.Params(4, 2, 1.5)
    assert p.q == pytest.approx(3.0) and p.beta == pytest.approx(1 + 1 / 6)
    for bad in ((2, 1, 2), (3, 0, 2), (3, 1, 1)):
        with pytest.raises(ValueError):
            geo.Params(*bad)


def test_kappa_theta_steps():
    beta = 4 / 3
    assert geo.kappa_theta(16, 1, beta) == (0, 0.5)
    assert geo.kappa_theta(35.9, 1, beta)[0] == 0
    assert geo.kappa_theta(36, 1, beta)[0] == 1
    assert geo.kappa_theta(0, 1, beta) == (0, 0.5)  # clamped
    assert geo.kappa_theta(64, 1, beta) == (2, 0.5 * beta**-2)


def test_K_iterations():
    assert geo.K_iterations(32, 1) == 0
    assert geo.K_iterations(72, 1) == 1
    with pytest.raises(ValueError):
        geo.K_iterations(31.9, 1)


@settings(max_examples=50, deadline=None)
@given(r=st.floats(16, 1e4), S=st.sampled_from([0.25, 0.5, 1.0]), n=st.floats(2.5, 10))
def test_theta_decay_band(r, S, n):
    # theta(r) e^{gamma sqrt r} = beta^{sqrt(r/4S) - kappa} / 2 lies in [beta^2/2, beta^3/2]
    beta = geo.Params(n, 1).beta
    _, th = geo.kappa_theta(r * S, S, beta)
    v = th * math.exp(geo.theta_rate(beta, S) * math.sqrt(r * S))
    assert beta**2 / 2 * (1 - 1e-9) <= v <= beta**3 / 2 * (1 + 1e-9)


def test_D_M_normalized_and_counting():
    g = zoo.cycle(20, "normalizing")
    rho = mt.default_intrinsic_metric(g).rho
    for p in (1.5, 4.0, math.inf):
        assert geo.D_p(g, rho, 0, 5, p) == pytest.approx(1.0)
        assert geo.M_p(g, rho, 0, 5, p) == pytest.approx(0.5)
    g = zoo.path(6)
    rho = mt.combinatorial_metric(g)
    assert geo.M_p(g, rho, 0, 3, 2.0) == pytest.approx(1.0)
    # Deg on a counting path: 1 at the ends, 2 inside; B_0(1) = {0, 1}
    assert geo.D_p(g, rho, 0, 1, 2.0) == pytest.approx(math.sqrt((1 + 4) / 2))
    assert geo.D_p(g, rho, 0, 1, math.inf) == 2.0


def brute_doubling(g, rho, x, R1, R2, d, k=400):
    rs = np.linspace(R1, R2, k)
    V = np.array([geo.ball_volume(g, rho, x, r) for r in rs])
    best = 1.0
    for i in range(k):
        best = max(best, float(np.max(V[i:] / V[i] * (rs[i] / rs[i:]) ** d)))
    return best


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 1000), d=st.floats(0.5, 3))
def test_doubling_constant_dominates_grid(seed, d):
    g = zoo.random_weighted(15, edge_prob=0.3, seed=seed)
    rho = mt.default_intrinsic_metric(g).rho
    R2 = float(rho[0].max())
    C, (r1, r2) = geo.doubling_constant(g, rho, 0, R2 / 8, R2, d)
    assert brute_doubling(g, rho, 0, R2 / 8, R2, d) <= C * (1 + 1e-12)
    assert R2 / 8 <= r1 <= r2 <= R2


def test_doubling_cycle_value():
    g = zoo.cycle(300, "normalizing")
    rho = mt.default_intrinsic_metric(g).rho
    C, _ = geo.doubling_constant(g, rho, 0, 42, 150, 1.0)
    # worst ratio: r1 -> 43^-, r2 = 43: (2*43+1)/(2*42+1) * (43/43)
    assert C == pytest.approx((2 * 43 + 1) / (2 * 42 + 1))


def test_sobolev_certificate_and_random_functions(rng):
    g = zoo.cycle(60, "normalizing")
    rho = mt.default_intrinsic_metric(g).rho
    est = geo.sobolev_constant(g, rho, 0, 12, 3.0)
    assert est.converged
    assert geo.sobolev_ratio(g, rho, 0, 12, 3.0, est.certificate) == pytest.approx(est.C_S, rel=1e-12)
    for _ in range(200):
        u = np.zeros(g.n)
        u[est.support] = rng.random(est.support.size) ** rng.uniform(0.2, 4)
        assert geo.sobolev_ratio(g, rho, 0, 12, 3.0, u) <= est.C_S * (1 + 1e-9)
    u = np.zeros(g.n)
    u[13] = 1.0  # boundary of B(12)
    with pytest.raises(ValueError):
        geo.sobolev_ratio(g, rho, 0, 12, 3.0, u)


def test_sv_check_targets():
    g = zoo.cycle(60, "normalizing")
    rho = mt.default_intrinsic_metric(g).rho
    sv = geo.sv_check(g, rho, 0, 6, 12, 3, 1, targets={"C_S": 1e-3, "C_D": 100})
    assert not sv.passed and sv.violations and sv.converged
    sv = geo.sv_check(g, rho, 0, 6, 12, 3, 1, targets={"C_S": 10, "C_D": 100})
    assert sv.passed
    rec = sv.to_json(g)
    assert rec["center"] == "0" and len(rec["sobolev"]) == len(sv.sobolev)


def test_normalized_gamma_bound_dominates(c300):
    g, _, rho, S = c300
    params = geo.Params(3, 1, math.inf)
    for r in (42.0, 60.0, 75.0):
        C_S = geo.sobolev_constant(g, rho, 0, r, 3.0, budget=0).C_S
        assert geo.log_gamma_error(g, rho, 0, r, params, S) <= geo.log_normalized_gamma_bound(r, C_S, params)


def test_profile_columns():
    g = zoo.cycle(20, "normalizing")
    rho = mt.default_intrinsic_metric(g).rho
    prof = geo.profile(g, rho, 0, geo.Params(3, 1), 1.0)
    rows = list(prof.rows())
    assert list(rows[0]) == prof.COLUMNS
    assert rows[-1]["volume"] == pytest.approx(g.m.sum())
