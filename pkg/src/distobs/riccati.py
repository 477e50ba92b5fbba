"""Filter-form continuous algebraic Riccati equation.

Solves ``P S^T + S P - P C^T C P + I = 0`` for the maximal (stabilising)
symmetric solution.  Cold starts use the stable invariant subspace of the
Hamiltonian ``[[S^T, -C^T C], [-I, -S]]``; the result is polished with
Kleinman-Newton sweeps, which are also used alone for warm starts.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DimensionError, NumericalError
from .leader import companion, output_selector
from .numerics import as_matrix, as_square, rank_with_tolerance, spectral_abscissa, spectrum, symmetrize
from .leader import observability_matrix

NEWTON_TOL = 1e-10
NEWTON_MAXITER = 50
#: minimum distance of Hamiltonian eigenvalues from the imaginary axis
AXIS_GAP = 1e-10
#: default relative change of alpha that triggers a re-solve
RECOMPUTE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class CareProblem:
    S_script: np.ndarray
    C_script: np.ndarray

    def __post_init__(self):
        S = as_square(self.S_script, "S_script")
        C = as_matrix(self.C_script, "C_script")
        if C.shape[1] != S.shape[0]:
            raise DimensionError(f"C_script {C.shape} does not conform with S_script {S.shape}")
        object.__setattr__(self, "S_script", S)
        object.__setattr__(self, "C_script", C)


@dataclass(frozen=True, eq=False)
class CareSolution:
    P: np.ndarray
    residual: float
    closed_loop_max_re: float
    asymmetry: float = 0.0
    newton_iterations: int = 0


def care_residual(P, S, C):
    """Frobenius norm of ``P S^T + S P - P C^T C P + I``."""
    R = P @ S.T + S @ P - P @ C.T @ C @ P + np.eye(S.shape[0])
    return float(np.linalg.norm(R))


def residual_bound(S):
    return 1e-8 * (1.0 + np.linalg.norm(S) ** 2)


def _hamiltonian_solve(S, C):
    m = S.shape[0]
    G = C.T @ C
    Ham = np.block([[S.T, -G], [-np.eye(m), -S]])
    eig = np.linalg.eigvals(Ham)
    gap = np.min(np.abs(eig.real))
    if gap < AXIS_GAP * max(1.0, np.linalg.norm(Ham, 1)):
        raise NumericalError(
            f"Hamiltonian has eigenvalues within {gap:.2e} of the imaginary axis; "
            "no stabilising solution can be extracted")
    T, Z, sdim = scipy.linalg.schur(Ham, output="real", sort="lhp")
    if sdim != m:
        raise NumericalError(f"stable subspace has dimension {sdim}, expected {m}")
    U1, U2 = Z[:m, :m], Z[m:, :m]
    if np.linalg.cond(U1) > 1e12:
        raise NumericalError("stable subspace is not a graph subspace (U1 singular)")
    # Hamiltonian is written for the dual (control) form A = S^T, so P = U2 U1^-1
    return np.linalg.solve(U1.T, U2.T).T


def _newton(P, S, C, maxiter=NEWTON_MAXITER, tol=NEWTON_TOL):
    """Kleinman iteration on the dual form ``A = S^T``, ``B = C^T``.

    Each sweep solves ``(A - B B^T P)^T X + X (A - B B^T P) + I + P B B^T P = 0``.
    Returns ``(P, iterations)``; raises if the closed loop stops being Hurwitz.
    """
    m = S.shape[0]
    G = C.T @ C
    bound = tol * (1.0 + np.linalg.norm(S) ** 2)
    for it in range(maxiter + 1):
        if care_residual(P, S, C) <= bound:
            return P, it
        if it == maxiter:
            break
        Ak = S.T - G @ P
        rhs = -(np.eye(m) + P @ G @ P)
        P = symmetrize(scipy.linalg.solve_continuous_lyapunov(Ak.T, rhs))
        if not np.all(np.isfinite(P)):
            raise NumericalError("Newton iteration produced non-finite iterate")
    return P, maxiter


def _finish(P, S, C, iterations):
    asym = float(np.linalg.norm(P - P.T)) / max(1.0, float(np.linalg.norm(P)))
    P = symmetrize(P)
    res = care_residual(P, S, C)
    cl = spectral_abscissa(S - P @ C.T @ C)
    if res > residual_bound(S):
        raise NumericalError(f"CARE residual {res:.3e} exceeds bound {residual_bound(S):.3e}")
    if cl >= 0:
        raise NumericalError(f"CARE solution is not stabilising (closed-loop abscissa {cl:.3e})")
    return CareSolution(P=P, residual=res, closed_loop_max_re=cl, asymmetry=asym,
                        newton_iterations=iterations)


def solve_care(prob, P_init=None):
    """Maximal solution of ``P S^T + S P - P C^T C P + I = 0``.

    Parameters
    ----------
    prob : CareProblem
    P_init : numpy.ndarray, optional
        Warm start.  Used for Newton directly when ``S - P_init C^T C`` is
        Hurwitz; otherwise ignored in favour of the Hamiltonian method.
    """
    S, C = prob.S_script, prob.C_script
    m = S.shape[0]
    if rank_with_tolerance(observability_matrix(C, S)) < m:
        # detectability: every unobservable mode must be stable
        for lam in spectrum(S):
            if lam.real >= 0:
                M = np.vstack([lam * np.eye(m) - S, C.astype(complex)])
                if np.linalg.matrix_rank(M, tol=1e-9 * max(1.0, np.linalg.norm(M))) < m:
                    raise ValueError(f"(C, S) is not detectable: mode {lam:.4g} unobservable")
    if P_init is not None and spectral_abscissa(S - P_init @ C.T @ C) < 0:
        P, it = _newton(symmetrize(P_init), S, C)
    else:
        P0 = _hamiltonian_solve(S, C)
        P, it = _newton(symmetrize(P0), S, C)
    return _finish(P, S, C, it)


def gain(P, C_script):
    """Observer gain ``F = P C^T``."""
    P, C = as_matrix(P, "P"), as_matrix(C_script, "C_script")
    if P.shape[1] != C.shape[1]:
        raise DimensionError(f"P {P.shape} does not conform with C {C.shape}")
    return P @ C.T


@dataclass
class GainCache:
    """Per-agent memo of the last Riccati solve.

    ``core`` is the ``n x n`` solution for the scalar-output companion
    problem; because every matrix in the lifted problem is a Kronecker
    product with ``I_p``, the full solution is ``kron(core, I_p)``.
    """

    recompute_tol: float = RECOMPUTE_TOL
    last_alpha: np.ndarray = None
    core: np.ndarray = None
    last_P: np.ndarray = None
    solve_count: int = 0
    _p: int = field(default=0, repr=False)

    def refresh(self, alpha, p):
        """Re-solve if ``alpha`` drifted beyond tolerance.  Returns True on a solve."""
        alpha = np.asarray(alpha, dtype=float)
        if self.last_alpha is not None and p == self._p:
            drift = np.linalg.norm(alpha - self.last_alpha)
            if drift <= self.recompute_tol * (1.0 + np.linalg.norm(self.last_alpha)):
                return False
        if not np.all(np.isfinite(alpha)):
            raise NumericalError("alpha has non-finite entries")
        n = alpha.size
        prob = CareProblem(companion(alpha, 1), output_selector(n, 1))
        warm = self.core if self.core is not None and self.core.shape == (n, n) else None
        sol = solve_care(prob, P_init=warm)
        self.core = sol.P
        self.last_alpha = alpha.copy()
        self.last_P = sol.P if p == 1 else np.kron(sol.P, np.eye(p))
        self._p = p
        self.solve_count += 1
        return True


def scheduled_gain(alpha_i, cache, p):
    """Gain ``F_i`` and solution ``P_i`` for the companion pair at ``alpha_i``.

    Served from ``cache`` when ``alpha_i`` is within ``recompute_tol`` (relative)
    of the last solved coefficients.
    """
    cache.refresh(alpha_i, p)
    n = cache.core.shape[0]
    return gain(cache.last_P, output_selector(n, p)), cache.last_P
