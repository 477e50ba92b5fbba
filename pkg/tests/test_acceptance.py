"""Acceptance criteria, one test each, at the stated tolerances.

Every test records a PASS/FAIL line that is printed in the terminal summary.
"""
import numpy as np
from scipy.linalg import expm

from distobs.engine import (estimate_rate, integrate, reference_leader, reference_scenario, verify_phi_hurwitz,
                            verify_salpha_hurwitz)
from distobs.graphnet import build_network_matrices, has_spanning_tree, random_digraph
from distobs.leader import LeaderSystem, canonical_lift, companion, minimal_polynomial, output_selector
from distobs.numerics import spectral_abscissa
from distobs.observers import OUTPUT_BASED, STATE_BASED, observer_costs
from distobs.riccati import CareProblem, care_residual, residual_bound, solve_care

from .conftest import reference_run
from .oracles import random_canonical_alpha, random_observable_leader, reachable_from_leader

SEEDS = (0, 1, 2, 3, 4)


def test_01_observer_costs(record_criterion):
    sb = observer_costs(STATE_BASED, q=5, p=3)
    ob = observer_costs(OUTPUT_BASED, p=3, n=5)
    got = (sb.dimension, sb.payload, ob.dimension, ob.payload)
    ok = got == (45, 45, 20, 8)
    record_criterion(1, "observer dimension and exchange costs", ok, f"sb {got[0]}/{got[1]}, ob {got[2]}/{got[3]}")
    assert ok


def test_02_minimal_polynomial(record_criterion):
    alpha = minimal_polynomial(reference_leader().S0)
    expected = np.array([0.0, 5.0, 0.0, 4.0, 0.0])
    err = np.abs(alpha - expected).max() if alpha.size == 5 else np.inf
    ok = alpha.size == 5 and err <= 1e-9
    record_criterion(2, "minimal polynomial s^5 + 5s^3 + 4s", ok, f"degree {alpha.size}, max coeff error {err:.1e}")
    assert ok


def test_03_convergence_reference_scenario(record_criterion):
    worst = {}
    for seed in SEEDS:
        term = reference_run(seed=seed).terminal()
        for name in ("err_alpha", "err_P", "err_zeta", "err_y"):
            worst[name] = max(worst.get(name, 0.0), float(term[name].max()))
    ok = all(v < 1e-3 for v in worst.values())
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    record_criterion(3, "all errors < 1e-3 at t=20, 5 seeds", ok, detail)
    assert ok, detail


def test_04_alpha_rate(record_criterion):
    tr = reference_run(seed=0)
    scn = reference_scenario()
    dH = build_network_matrices(scn.graph).delta_H
    est = estimate_rate(tr.stacked("err_alpha"), tr.times)
    bound = 0.8 * scn.gains.mu_alpha * dH
    ok = est.rate >= bound and est.r2 >= 0.98
    record_criterion(4, "alpha error rate >= 0.8 mu_alpha delta_H", ok,
                     f"rate {est.rate:.4f} vs {bound:.4f}, R^2 {est.r2:.5f}, window {est.window}")
    assert ok


def test_05_phi_hurwitz_monte_carlo(record_criterion):
    rng = np.random.default_rng(2005)
    passed, worst = 0, -np.inf
    for _ in range(100):
        n, p, N = int(rng.integers(1, 6)), int(rng.integers(1, 3)), int(rng.integers(1, 7))
        A = rng.standard_normal((n, n))
        C = rng.standard_normal((p, n))
        F = build_network_matrices(random_digraph(rng, N, 0.3, rooted=True, weighted=True)).H
        dF = np.linalg.eigvals(F).real.min()
        rep = verify_phi_hurwitz(A, C, F, 1.01 / dF)
        worst = max(worst, rep.abscissa)
        passed += rep.abscissa < -1e-9
    ok = passed == 100
    record_criterion(5, "Phi Hurwitz at mu = 1.01/delta_F", ok, f"{passed}/100, worst abscissa {worst:.3e}")
    assert ok


def test_06_salpha_hurwitz(record_criterion):
    scn = reference_scenario()
    lift = canonical_lift(scn.leader)
    ref = verify_salpha_hurwitz(lift, build_network_matrices(scn.graph).H, scn.gains.mu_zeta)
    rng = np.random.default_rng(2006)
    passed, worst = 0, -np.inf
    for _ in range(50):
        net = build_network_matrices(random_digraph(rng, int(rng.integers(1, 7)), 0.3, rooted=True, weighted=True))
        rep = verify_salpha_hurwitz(lift, net.H, 1.01 / net.delta_H)
        worst = max(worst, rep.abscissa)
        passed += rep.hurwitz
    ok = ref.hurwitz and passed == 50
    record_criterion(6, "S_alpha Hurwitz (reference + 50 graphs)", ok,
                     f"reference abscissa {ref.abscissa:.4f}, {passed}/50, worst {worst:.3e}")
    assert ok


def test_07_care_quality(record_criterion):
    rng = np.random.default_rng(2007)
    passed, worst = 0, 0.0
    for _ in range(500):
        n, p = int(rng.integers(1, 7)), int(rng.integers(1, 4))
        S = companion(random_canonical_alpha(rng, n), p)
        C = output_selector(n, p)
        sol = solve_care(CareProblem(S, C))
        P = sol.P
        ratio = care_residual(P, S, C) / residual_bound(S)
        worst = max(worst, ratio)
        sym = np.array_equal(P, P.T)
        pd = np.linalg.eigvalsh(P).min() > 0
        cl = spectral_abscissa(S - P @ C.T @ C) < 0
        passed += ratio <= 1.0 and sym and pd and cl
    ok = passed == 500
    record_criterion(7, "CARE residual/SPD/stabilizing", ok, f"{passed}/500, worst residual/bound {worst:.2e}")
    assert ok


def test_08_spanning_tree_iff_positive_margin(record_criterion):
    rng = np.random.default_rng(2008)
    passed = 0
    for k in range(200):
        g = random_digraph(rng, int(rng.integers(1, 9)), float(rng.uniform(0.05, 0.5)), rooted=k % 4 == 0,
                           weighted=k % 2 == 0)
        tree = has_spanning_tree(g)
        margin = build_network_matrices(g).delta_H > 1e-9
        passed += tree == margin == reachable_from_leader(g.n_followers, g.weights)
    ok = passed == 200
    record_criterion(8, "spanning tree <=> delta_H > 1e-9", ok, f"{passed}/200")
    assert ok


def test_09_lift_output_identity(record_criterion):
    rng = np.random.default_rng(2009)
    worst = 0.0
    for _ in range(100):
        S0, C0, v0 = random_observable_leader(rng, int(rng.integers(1, 7)), int(rng.integers(1, 4)))
        lift = canonical_lift(LeaderSystem(S0, C0, v0))
        for t in rng.uniform(0.0, 5.0, 10):
            y_lift = lift.C_script0 @ expm(lift.S_script0 * t) @ lift.zeta0_init
            y_true = C0 @ expm(S0 * t) @ v0
            worst = max(worst, float(np.abs(y_lift - y_true).max()))
    ok = worst <= 1e-8
    record_criterion(9, "lift output identity", ok, f"max deviation {worst:.1e} over 1000 samples")
    assert ok


def test_10_numerical_hygiene(record_criterion):
    coarse = reference_run(seed=0)
    fine = integrate(reference_scenario(seed=0, dt=5e-5))
    tc, tf = coarse.terminal(), fine.terminal()
    diff = {k: float(np.abs(tc[k] - tf[k]).max()) for k in tc}
    again = integrate(reference_scenario(seed=0))
    bitwise = all(np.array_equal(coarse.series[k], again.series[k]) for k in coarse.series)
    ok = max(diff.values()) <= 1e-6 and bitwise
    detail = ", ".join(f"{k} {v:.1e}" for k, v in diff.items()) + f"; bitwise identical: {bitwise}"
    record_criterion(10, "step halving <= 1e-6 and determinism", ok, detail)
    assert ok, detail
