import numpy as np
import pytest
import sympy
from hypothesis import given, strategies as st

from distobs.errors import DimensionError, NumericalError
from distobs.leader import (LeaderSystem, canonical_lift, companion, format_polynomial, leader_states,
                            leader_trajectory, minimal_polynomial, observability_matrix, polynomial_residual)
from distobs.engine import reference_leader
from distobs.numerics import expm, rank_with_tolerance, spectrum

from .oracles import random_observable_leader


def test_reference_minimal_polynomial():
    alpha = minimal_polynomial(reference_leader().S0)
    np.testing.assert_allclose(alpha, [0, 5, 0, 4, 0], atol=1e-9)
    assert format_polynomial(alpha) == "s^5 + 5s^3 + 4s"


def test_reference_minimal_polynomial_matches_exact_symbolic():
    S = sympy.Matrix(reference_leader().S0.astype(int))
    s = sympy.symbols("s")
    # the characteristic polynomial is squarefree here, so it is the minimal one
    assert sympy.expand(S.charpoly(s).as_expr()) == s**5 + 5 * s**3 + 4 * s


@pytest.mark.parametrize("S, expected", [
    (np.eye(3), [-1.0]),
    (np.diag([2.0, 2.0, 3.0]), [-5.0, 6.0]),
    (np.zeros((2, 2)), [0.0]),
    (np.array([[0.0]]), [0.0]),
])
def test_minimal_polynomial_small(S, expected):
    np.testing.assert_allclose(minimal_polynomial(S), expected, atol=1e-12)


def test_minimal_polynomial_of_jordan_block_has_full_degree():
    J = np.array([[2.0, 1.0], [0.0, 2.0]])
    np.testing.assert_allclose(minimal_polynomial(J), [-4.0, 4.0], atol=1e-12)


def test_minimal_polynomial_ill_conditioned_rejected():
    S = np.diag([1.0, 1.0 + 1e-7, 1.0 + 2e-7, 1.0 + 3e-7])
    with pytest.raises(NumericalError):
        minimal_polynomial(S, tol=1e-14)


def test_companion_examples():
    A = companion([0, 5, 0, 4, 0], 3)
    assert A.shape == (15, 15)
    np.testing.assert_array_equal(A[12:15, 3:6], -4 * np.eye(3))
    np.testing.assert_array_equal(A[12:15, 9:12], -5 * np.eye(3))
    np.testing.assert_array_equal(A[12:15, [0, 1, 2, 6, 7, 8, 12, 13, 14]], 0)
    np.testing.assert_array_equal(A[0:3, 3:6], np.eye(3))
    np.testing.assert_array_equal(companion([2.5]), [[-2.5]])
    np.testing.assert_array_equal(companion([0, 1]), [[0, 1], [-1, 0]])


def test_reference_lift():
    lift = canonical_lift(reference_leader())
    assert (lift.n, lift.p) == (5, 3)
    assert lift.S_script0.shape == (15, 15)
    np.testing.assert_array_equal(lift.C_script0, np.kron([[1, 0, 0, 0, 0]], np.eye(3)))
    # y0 = (0.5 cos0, sin t, 2 cos 2t); derivatives at t=0 by hand
    expected = [0.5, 0, 2, 0, 1, 0, 0, 0, -8, 0, -1, 0, 0, 0, 32]
    np.testing.assert_allclose(lift.zeta0_init, expected, atol=1e-12)
    np.testing.assert_allclose(lift.S_script0, companion([0, 5, 0, 4, 0], 3), atol=1e-9)


def test_scalar_and_rotation_lifts():
    lift = canonical_lift(LeaderSystem([[0.0]], [[1.0]], [3.0]))
    assert lift.n == 1
    np.testing.assert_allclose(lift.S_script0, [[0.0]], atol=1e-15)
    np.testing.assert_array_equal(lift.C_script0, [[1.0]])
    np.testing.assert_array_equal(lift.zeta0_init, [3.0])
    lift = canonical_lift(LeaderSystem([[0, 1], [-1, 0]], [[1, 0]], [1, 0]))
    np.testing.assert_allclose(lift.alpha0, [0, 1], atol=1e-12)
    np.testing.assert_allclose(lift.zeta0_init, [1, 0], atol=1e-15)


def test_leader_trajectory():
    L = reference_leader()
    v, y = leader_trajectory(L, 0.0)
    np.testing.assert_array_equal(v, L.v0_init)
    np.testing.assert_array_equal(y, L.C0 @ L.v0_init)
    for t in (0.7, 3.0, 11.0):
        v, y = leader_trajectory(L, t)
        np.testing.assert_allclose(v, [1, np.sin(t), np.cos(t), np.sin(2 * t), np.cos(2 * t)], atol=1e-12)
    still = LeaderSystem(np.zeros((2, 2)), np.eye(2), [4.0, -1.0])
    np.testing.assert_array_equal(leader_trajectory(still, 9.0)[0], [4.0, -1.0])
    with pytest.raises(ValueError):
        leader_trajectory(L, -1.0)


def test_leader_states_grid_matches_pointwise():
    L = reference_leader()
    times = np.linspace(0, 20, 41)
    V = leader_states(L, times)
    for t, v in zip(times, V):
        np.testing.assert_allclose(v, leader_trajectory(L, t)[0], atol=1e-12)


def test_leader_dimension_checks():
    with pytest.raises(DimensionError):
        LeaderSystem(np.eye(2), np.ones((1, 3)), [1, 2])
    with pytest.raises(DimensionError):
        LeaderSystem(np.eye(2), np.ones((1, 2)), [1, 2, 3])


@given(st.integers(0, 2**32 - 1))
def test_minimal_polynomial_properties(seed):
    rng = np.random.default_rng(seed)
    q, p = int(rng.integers(1, 7)), int(rng.integers(1, 4))
    S0, C0, v0 = random_observable_leader(rng, q, p)
    alpha = minimal_polynomial(S0)
    n = alpha.size
    # annihilates S0
    assert polynomial_residual(S0, alpha) <= 1e-8 * max(1.0, np.linalg.norm(S0, 2) ** n)
    # minimality: powers I..S0^(n-1) are independent
    powers = np.column_stack([np.linalg.matrix_power(S0, k).ravel() for k in range(n)])
    powers /= np.linalg.norm(powers, axis=0)
    assert rank_with_tolerance(powers, 1e-9) == n
    # companion spectrum = distinct eigenvalues of S0
    comp = spectrum(companion(alpha))
    for lam in comp:
        assert np.min(np.abs(spectrum(S0) - lam)) < 1e-6
    # lifted pair is observable
    lift = canonical_lift(LeaderSystem(S0, C0, v0))
    assert rank_with_tolerance(observability_matrix(lift.C_script0, lift.S_script0)) == n * p


@given(st.lists(st.floats(-3, 3), min_size=1, max_size=6))
def test_companion_spectrum_is_root_set(alpha):
    roots = np.roots(np.concatenate([[1.0], alpha]))
    ev = spectrum(companion(alpha))
    assert np.allclose(np.sort_complex(roots), np.sort_complex(ev), atol=1e-5)


@given(st.lists(st.floats(-3, 3), min_size=1, max_size=6), st.integers(1, 3))
def test_companion_pair_always_observable(alpha, p):
    from distobs.leader import output_selector
    n = len(alpha)
    O = observability_matrix(output_selector(n, p), companion(alpha, p))
    assert rank_with_tolerance(O) == n * p


def lift_identity_error(rng, times):
    q, p = int(rng.integers(1, 7)), int(rng.integers(1, 4))
    S0, C0, v0 = random_observable_leader(rng, q, p)
    sys = LeaderSystem(S0, C0, v0)
    lift = canonical_lift(sys)
    worst = 0.0
    for t in times:
        y_lift = lift.C_script0 @ (expm(lift.S_script0, t) @ lift.zeta0_init)
        y = C0 @ (expm(S0, t) @ v0)
        worst = max(worst, float(np.max(np.abs(y_lift - y))))
    return worst


def test_lift_reproduces_leader_output(rng):
    for _ in range(20):
        assert lift_identity_error(rng, rng.uniform(0, 5, 10)) <= 1e-8
