"""Leader exosystem, its minimal polynomial, and the observable canonical lift.

The lift replaces the leader state ``v0`` by the stacked output derivatives
``zeta0 = col(y0, y0', ..., y0^(n-1))``, whose dynamics are the companion
matrix of the minimal polynomial of ``S0`` tensored with ``I_p``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionError, NumericalError
from .numerics import DEFAULT_RANK_TOL, as_matrix, as_square, expm, rank_with_tolerance

#: coefficient solves with a worse condition number are rejected
MAX_CONDITION = 1e12


@dataclass(frozen=True, eq=False)
class LeaderSystem:
    S0: np.ndarray
    C0: np.ndarray
    v0_init: np.ndarray

    def __post_init__(self):
        S0 = as_square(self.S0, "S0")
        C0 = as_matrix(self.C0, "C0")
        v0 = np.asarray(self.v0_init, dtype=float).ravel()
        if C0.shape[1] != S0.shape[0] or v0.size != S0.shape[0]:
            raise DimensionError(
                f"inconsistent leader dimensions: S0 {S0.shape}, C0 {C0.shape}, v0 {v0.shape}")
        for arr in (S0, C0, v0):
            arr.setflags(write=False)
        object.__setattr__(self, "S0", S0)
        object.__setattr__(self, "C0", C0)
        object.__setattr__(self, "v0_init", v0)

    @property
    def q(self):
        return self.S0.shape[0]

    @property
    def p(self):
        return self.C0.shape[0]


@dataclass(frozen=True, eq=False)
class CanonicalLift:
    n: int
    p: int
    alpha0: np.ndarray
    S_script0: np.ndarray
    C_script0: np.ndarray
    zeta0_init: np.ndarray
    #: maps v0 to zeta0, rows blocks C0 S0^k
    output_map: np.ndarray


def minimal_polynomial(S0, tol=DEFAULT_RANK_TOL):
    """Coefficients ``(a_1, ..., a_n)`` of the monic minimal polynomial of ``S0``.

    Vectorised powers ``I, S0, S0^2, ...`` are appended until the newest one
    lies numerically in the span of the previous ones; the coefficients then
    solve the least-squares problem ``sum_k a_k vec(S0^(n-k)) = -vec(S0^n)``.
    Columns are normalised before the rank test so that the growth of
    ``||S0^k||`` does not mask the dependency.

    Returns
    -------
    numpy.ndarray
        ``alpha`` with ``S0^n + alpha[0] S0^(n-1) + ... + alpha[n-1] I = 0``.
    """
    S0 = as_square(S0, "S0")
    q = S0.shape[0]
    powers = [np.eye(q)]
    cols = [np.eye(q).ravel()]
    for k in range(1, q + 1):
        powers.append(powers[-1] @ S0)
        cols.append(powers[-1].ravel())
        K = np.column_stack(cols)
        norms = np.linalg.norm(K, axis=0)
        Kn = K / np.where(norms > 0, norms, 1.0)
        if rank_with_tolerance(Kn, tol) < k + 1:
            break
    n = len(powers) - 1
    # columns of basis ordered S0^(n-1), ..., I so they align with alpha_1..alpha_n
    basis = np.column_stack(cols[n - 1::-1])
    scale = np.linalg.norm(basis, axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    Bn = basis / scale
    cond = np.linalg.cond(Bn)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise NumericalError(
            f"minimal polynomial coefficient solve is ill-conditioned (cond={cond:.3g}); "
            "supply an exactly structured S0 or loosen tol")
    sol, *_ = np.linalg.lstsq(Bn, -cols[n], rcond=None)
    alpha = sol / scale
    residual = np.linalg.norm(powers[n] + sum(a * P for a, P in zip(alpha, powers[n - 1::-1])))
    bound = tol * max(1.0, np.linalg.norm(S0, 2) ** n)
    if residual > bound:
        raise NumericalError(f"minimal polynomial residual {residual:.3g} exceeds {bound:.3g}")
    return alpha


def polynomial_residual(S0, alpha):
    """Frobenius norm of ``m(S0)`` for the monic polynomial with coefficients ``alpha``."""
    S0 = as_square(S0)
    M = np.eye(S0.shape[0])
    for a in alpha:
        M = M @ S0 + a * np.eye(S0.shape[0])
    return float(np.linalg.norm(M))


def companion(alpha, p=1):
    """Block companion matrix ``companion(alpha) kron I_p``.

    Super-diagonal identity, bottom row ``(-alpha_n, ..., -alpha_1)``.
    """
    alpha = np.asarray(alpha, dtype=float).ravel()
    n = alpha.size
    if n < 1 or p < 1:
        raise DimensionError("need n >= 1 and p >= 1")
    A = np.zeros((n, n))
    A[:-1, 1:] = np.eye(n - 1)
    A[-1, :] = -alpha[::-1]
    return A if p == 1 else np.kron(A, np.eye(p))


def output_selector(n, p):
    """``[1 0 ... 0] kron I_p``: picks ``y`` out of the lifted state."""
    e1 = np.zeros((1, n))
    e1[0, 0] = 1.0
    return np.kron(e1, np.eye(p))


def canonical_lift(sys, tol=DEFAULT_RANK_TOL):
    alpha0 = minimal_polynomial(sys.S0, tol)
    n, p = alpha0.size, sys.p
    blocks = [sys.C0]
    for _ in range(n - 1):
        blocks.append(blocks[-1] @ sys.S0)
    O = np.vstack(blocks)
    return CanonicalLift(
        n=n,
        p=p,
        alpha0=alpha0,
        S_script0=companion(alpha0, p),
        C_script0=output_selector(n, p),
        zeta0_init=O @ sys.v0_init,
        output_map=O,
    )


def leader_trajectory(sys, t):
    """Exact ``(v0(t), y0(t))``."""
    if t < 0:
        raise ValueError("t must be non-negative")
    v = expm(sys.S0, t) @ sys.v0_init
    return v, sys.C0 @ v


def leader_states(sys, times):
    """Exact ``v0`` on a time grid, shape ``(len(times), q)``.

    Uses the real Schur form ``S0 = Z T Z^T`` once and exponentiates ``T``
    per time, which is cheaper than a fresh ``expm`` of ``S0`` and stays
    accurate for defective ``S0``.
    """
    times = np.asarray(times, dtype=float)
    T, Z = scipy.linalg.schur(sys.S0, output="real")
    w = Z.T @ sys.v0_init
    out = np.empty((times.size, T.shape[0]))
    for start in range(0, times.size, 20000):
        chunk = times[start:start + 20000]
        stack = scipy.linalg.expm(chunk[:, None, None] * T[None])
        out[start:start + chunk.size] = np.einsum("kij,j->ki", stack, w) @ Z.T
    if not np.all(np.isfinite(out)):
        raise NumericalError("leader trajectory overflow")
    return out


def observability_matrix(C, A):
    n = A.shape[0]
    blocks = [C]
    for _ in range(n - 1):
        blocks.append(blocks[-1] @ A)
    return np.vstack(blocks)


def format_polynomial(alpha, var="s", digits=10):
    """Human-readable monic polynomial, e.g. ``s^5 + 5s^3 + 4s``."""
    alpha = np.asarray(alpha, dtype=float)
    n = alpha.size
    terms = [f"{var}^{n}" if n > 1 else var]
    for k, a in enumerate(alpha, start=1):
        a = round(float(a), digits)
        if a == 0:
            continue
        power = n - k
        mag = abs(a)
        coef = f"{mag:g}" if (mag != 1 or power == 0) else ""
        mono = "" if power == 0 else (var if power == 1 else f"{var}^{power}")
        terms.append(("- " if a < 0 else "+ ") + coef + mono)
    return " ".join(terms)
