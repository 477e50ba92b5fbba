import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from distobs.errors import DimensionError, NumericalError
from distobs.numerics import expm, kron, rank_with_tolerance, real_part_bounds, spectrum

from .oracles import charpoly_leverrier

S0_REF = np.array([[0, 0, 0, 0, 0], [0, 0, 1, 0, 0], [0, -1, 0, 0, 0], [0, 0, 0, 0, 2], [0, 0, 0, -2, 0]], float)


def small_matrices(max_n=6, bound=5.0):
    return st.integers(1, max_n).flatmap(
        lambda n: hnp.arrays(float, (n, n), elements=st.floats(-bound, bound, allow_nan=False)))


def test_spectrum_trivial_cases():
    np.testing.assert_allclose(spectrum(np.eye(3)), [1, 1, 1])
    np.testing.assert_allclose(spectrum([[0, 1], [-1, 0]]), [-1j, 1j], atol=1e-14)


def test_spectrum_reference_leader_against_charpoly_roots():
    # independent route: Faddeev-LeVerrier coefficients, then numpy's companion root finder
    roots = np.roots(charpoly_leverrier(S0_REF))
    roots = roots[np.lexsort((roots.imag, np.round(roots.real, 8)))]
    got = spectrum(S0_REF)
    np.testing.assert_allclose(got, [-2j, -1j, 0, 1j, 2j], atol=1e-12)
    np.testing.assert_allclose(got, roots, atol=1e-7)


def test_spectrum_ordering_is_lexicographic(rng):
    A = rng.standard_normal((8, 8))
    ev = spectrum(A)
    keys = [(round(z.real, 9), z.imag) for z in ev]
    assert keys == sorted(keys)


def test_spectrum_rejects_non_square():
    with pytest.raises(DimensionError):
        spectrum(np.ones((2, 3)))


def test_real_part_bounds_examples():
    assert real_part_bounds(np.eye(3)) == (1.0, 1.0)
    assert real_part_bounds(S0_REF) == pytest.approx((0.0, 0.0), abs=1e-14)
    assert real_part_bounds(np.diag([-1.0, 2.0])) == (2.0, -1.0)


def test_spectrum_trace_and_determinant(rng):
    for _ in range(50):
        n = rng.integers(1, 21)
        A = rng.standard_normal((n, n))
        ev = spectrum(A)
        assert ev.size == n
        assert abs(ev.sum() - np.trace(A)) <= 1e-8 * max(1.0, np.abs(A).sum())
        det = np.linalg.det(A)
        assert abs(np.prod(ev) - det) <= 1e-8 * max(1.0, abs(det)) * n
        # conjugate closure
        np.testing.assert_allclose(np.sort_complex(ev), np.sort_complex(ev.conj()), atol=1e-8)


def test_kron_examples():
    B = np.array([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_array_equal(kron(np.eye(2), B), np.block([[B, np.zeros((2, 2))], [np.zeros((2, 2)), B]]))
    K = kron([[0, 1], [0, 0]], np.eye(3))
    assert K.shape == (6, 6)
    np.testing.assert_array_equal(K[0:3, 3:6], np.eye(3))
    assert np.count_nonzero(K) == 3
    np.testing.assert_array_equal(kron([[2.0]], [[3.0]]), [[6.0]])


@given(hnp.arrays(float, (2, 3), elements=st.integers(-50, 50).map(float)),
       hnp.arrays(float, (3, 2), elements=st.integers(-50, 50).map(float)),
       hnp.arrays(float, (3, 2), elements=st.integers(-50, 50).map(float)))
def test_kron_bilinear(A, B, C):
    np.testing.assert_array_equal(kron(A, B + C), kron(A, B) + kron(A, C))


def test_expm_closed_forms():
    np.testing.assert_array_equal(expm(np.zeros((3, 3)), 2.5), np.eye(3))
    for t in (0.3, 1.0, 7.5):
        R = expm([[0, 1], [-1, 0]], t)
        np.testing.assert_allclose(R, [[np.cos(t), np.sin(t)], [-np.sin(t), np.cos(t)]], rtol=1e-12, atol=1e-13)
        v = expm(S0_REF, t) @ np.array([1, 0, 1, 0, 1.0])
        np.testing.assert_allclose(v, [1, np.sin(t), np.cos(t), np.sin(2 * t), np.cos(2 * t)], atol=1e-12)


def test_expm_relative_accuracy_at_norm_50():
    # skew-symmetric generator: exp is a rotation, so compare with its closed form
    w = 50.0
    R = expm([[0, w], [-w, 0]], 1.0)
    np.testing.assert_allclose(R, [[np.cos(w), np.sin(w)], [-np.sin(w), np.cos(w)]], rtol=0, atol=1e-10)


def test_expm_overflow_is_reported():
    with pytest.raises(NumericalError):
        expm([[1000.0]], 10.0)


@given(small_matrices(max_n=5, bound=1.0), st.floats(0, 2), st.floats(0, 2))
def test_expm_group_property(A, s, t):
    A = A * min(1.0, 5.0 / max(np.linalg.norm(A, 2), 1e-12))
    lhs = expm(A, s) @ expm(A, t)
    np.testing.assert_allclose(lhs, expm(A, s + t), atol=1e-9 * np.linalg.norm(expm(A, s + t)))


def test_expm_derivative_finite_difference(rng):
    h = 1e-6
    for _ in range(20):
        A = rng.standard_normal((4, 4))
        A *= 2.0 / np.linalg.norm(A, 2)
        t = rng.uniform(0, 2)
        fd = (expm(A, t + h) - expm(A, t)) / h
        np.testing.assert_allclose(fd, A @ expm(A, t), atol=1e-4)


def test_rank_examples():
    assert rank_with_tolerance(np.eye(3)) == 3
    assert rank_with_tolerance(np.zeros((3, 3))) == 0
    assert rank_with_tolerance([[1, 1], [1, 1]]) == 1
    with pytest.raises(ValueError):
        rank_with_tolerance(np.eye(2), tol=0)
