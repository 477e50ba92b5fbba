"""Dense real-matrix kernels and spectral helpers.

Matrices are plain 2-D ``float`` numpy arrays throughout the package.
"""

import numpy as np
import scipy.linalg

from .errors import DimensionError, NumericalError

#: relative singular-value threshold used by :func:`rank_with_tolerance`
DEFAULT_RANK_TOL = 1e-9


def as_matrix(A, name="matrix"):
    """Return ``A`` as a finite 2-D float array."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NumericalError(f"{name} has non-finite entries")
    return A


def as_square(A, name="matrix"):
    A = as_matrix(A, name)
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {A.shape}")
    return A


def spectrum(A):
    """Eigenvalues of a square matrix, sorted by real part then imaginary part.

    Real parts are compared after rounding to 12 significant digits relative
    to ``max(1, ||A||)`` so that the two members of a conjugate pair, whose
    computed real parts may differ in the last bit, are ordered by imaginary
    part.
    """
    A = as_square(A)
    try:
        eig = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue iteration did not converge ({exc})") from exc
    scale = max(1.0, float(np.linalg.norm(A, 1)))
    key_re = np.round(eig.real / scale, 12)
    order = np.lexsort((eig.imag, key_re))
    return eig[order].astype(complex)


def real_part_bounds(A):
    """Return ``(max Re sigma(A), min Re sigma(A))``."""
    re = spectrum(A).real
    return float(re.max()), float(re.min())


def spectral_abscissa(A):
    return real_part_bounds(A)[0]


def is_hurwitz(A, margin=0.0):
    return spectral_abscissa(A) < -margin


def kron(A, B):
    return np.kron(as_matrix(A, "A"), as_matrix(B, "B"))


def expm(A, t=1.0):
    """Matrix exponential ``exp(A t)`` (scaling and squaring, Pade core)."""
    A = as_square(A)
    with np.errstate(over="raise", invalid="raise"):
        try:
            E = scipy.linalg.expm(A * float(t))
        except FloatingPointError as exc:
            raise NumericalError(f"expm overflow for ||A t|| = {np.linalg.norm(A) * abs(t):.3g}") from exc
    if not np.all(np.isfinite(E)):
        raise NumericalError(f"expm overflow for ||A t|| = {np.linalg.norm(A) * abs(t):.3g}")
    return E


def rank_with_tolerance(A, tol=DEFAULT_RANK_TOL):
    """Number of singular values above ``tol`` times the largest one."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    s = np.linalg.svd(as_matrix(A), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


def symmetrize(P):
    return 0.5 * (P + P.T)
