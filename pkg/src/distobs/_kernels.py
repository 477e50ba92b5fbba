"""Compiled inner loops: companion-form Newton solves and the RK4 drivers.

Every kernel works on preallocated arrays and returns a status code instead
of raising, so that the Python side can take over (cold Riccati starts,
divergence reporting) and resume at the same step.
"""

import numpy as np
from numba import njit

OK = 0
NEED_COLD_SOLVE = 1
DIVERGED = 2

DIVERGENCE_LIMIT = 1e12


@njit(cache=True)
def companion_core(alpha):
    n = alpha.size
    A = np.zeros((n, n))
    for k in range(n - 1):
        A[k, k + 1] = 1.0
    for k in range(n):
        A[n - 1, k] = -alpha[n - 1 - k]
    return A


@njit(cache=True)
def _abscissa(M):
    ev = np.linalg.eigvals(M.astype(np.complex128))
    return np.max(ev.real)


@njit(cache=True)
def _core_residual(A, P):
    # P A^T + A P - P e1 e1^T P + I for the scalar-output companion pair
    n = A.shape[0]
    R = P @ A.T + A @ P + np.eye(n)
    for r in range(n):
        for c in range(n):
            R[r, c] -= P[r, 0] * P[0, c]
    return np.sqrt(np.sum(R * R))


@njit(cache=True)
def newton_core(alpha, P, tol, maxiter):
    """Kleinman-Newton for ``P A^T + A P - P e1 e1^T P + I = 0``, ``A = companion(alpha)``.

    Starts from ``P`` (must be stabilising).  Lyapunov steps are solved as an
    ``n^2`` linear system.  Returns ``(P, ok)``; ``ok`` is False when the start
    is not stabilising, the iteration stalls, or the result is not stabilising.
    """
    n = alpha.size
    A = companion_core(alpha)
    cl = A.copy()
    cl[:, 0] -= P[:, 0]
    if _abscissa(cl) >= 0.0:
        return P, False
    bound = tol * (1.0 + np.sum(A * A))
    eye = np.eye(n)
    for _ in range(maxiter + 1):
        if _core_residual(A, P) <= bound:
            cl = A.copy()
            cl[:, 0] -= P[:, 0]
            return P, _abscissa(cl) < 0.0
        # dual closed loop Ak = A^T - e1 e1^T P; solve Ak^T X + X Ak = -(I + P e1 e1^T P)
        AkT = A.copy()
        AkT[:, 0] -= P[:, 0]
        K = np.kron(AkT, eye) + np.kron(eye, AkT)
        rhs = -eye.copy()
        for r in range(n):
            for c in range(n):
                rhs[r, c] -= P[r, 0] * P[0, c]
        X = np.linalg.solve(K, rhs.ravel()).reshape((n, n))
        P = 0.5 * (X + X.T)
        if not np.all(np.isfinite(P)):
            return P, False
    return P, False


@njit(cache=True)
def _refresh(i, alpha, last_alpha, core, solve_count, rtol, ntol, maxiter):
    """Cache check for agent ``i``; returns False when a cold solve is required."""
    d = 0.0
    s = 0.0
    for k in range(alpha.size):
        d += (alpha[k] - last_alpha[i, k]) ** 2
        s += last_alpha[i, k] ** 2
    if np.sqrt(d) <= rtol * (1.0 + np.sqrt(s)):
        return True
    P, ok = newton_core(alpha, core[i].copy(), ntol, maxiter)
    if not ok:
        return False
    core[i] = P
    last_alpha[i] = alpha
    solve_count[i] += 1
    return True


@njit(cache=True)
def _ob_rhs(v0, alpha, zeta, S0, C0, alpha0, W, deg, mu_a, mu_z, p, core, dv0, dalpha, dzeta):
    N, n = alpha.shape
    dv0[:] = S0 @ v0
    y0 = C0 @ v0
    for i in range(N):
        # coefficient consensus, node 0 broadcasts alpha0
        for k in range(n):
            acc = W[i, 0] * alpha0[k]
            for j in range(N):
                acc += W[i, j + 1] * alpha[j, k]
            dalpha[i, k] = mu_a * (acc - deg[i] * alpha[i, k])
        for r in range(p):
            acc = W[i, 0] * y0[r]
            for j in range(N):
                acc += W[i, j + 1] * zeta[j, r]
            innov = acc - deg[i] * zeta[i, r]
            # (companion(alpha_i) kron I_p) zeta_i, blockwise
            for k in range(n - 1):
                dzeta[i, k * p + r] = zeta[i, (k + 1) * p + r]
            last = 0.0
            for k in range(n):
                last -= alpha[i, n - 1 - k] * zeta[i, k * p + r]
            dzeta[i, (n - 1) * p + r] = last
            for k in range(n):
                dzeta[i, k * p + r] += mu_z * core[i, k, 0] * innov


@njit(cache=True)
def ob_run(k0, n_steps, dt, v0, alpha, zeta, S0, C0, alpha0, W, deg, mu_a, mu_z, p,
           last_alpha, core, solve_count, rtol, ntol, maxiter,
           v0_exact, out_map, core0, rec, req_alpha):
    """Integrate the output-based network from step ``k0``.

    ``rec`` has shape ``(n_steps + 1, 5, N)`` holding errors of
    ``(y, alpha, zeta, P, S)`` at each grid time.  Returns ``(status, k, agent)``.
    """
    N, n = alpha.shape
    sqp = np.sqrt(p)
    dv = np.empty((4, v0.size))
    da = np.empty((4, N, n))
    dz = np.empty((4, N, n * p))
    sv = np.empty_like(v0)
    sa = np.empty_like(alpha)
    sz = np.empty_like(zeta)
    coeffs = np.array([0.0, 0.5, 0.5, 1.0])
    for k in range(k0, n_steps + 1):
        for i in range(N):
            if not _refresh(i, alpha[i], last_alpha, core, solve_count, rtol, ntol, maxiter):
                req_alpha[:] = alpha[i]
                return NEED_COLD_SOLVE, k, i
        zex = out_map @ v0_exact[k]
        for i in range(N):
            ea = 0.0
            for c in range(n):
                ea += (alpha[i, c] - alpha0[c]) ** 2
            ez = 0.0
            ey = 0.0
            for c in range(n * p):
                d2 = (zeta[i, c] - zex[c]) ** 2
                ez += d2
                if c < p:
                    ey += d2
            ep = 0.0
            for r in range(n):
                for c in range(n):
                    ep += (core[i, r, c] - core0[r, c]) ** 2
            rec[k, 0, i] = np.sqrt(ey)
            rec[k, 1, i] = np.sqrt(ea)
            rec[k, 2, i] = np.sqrt(ez)
            rec[k, 3, i] = sqp * np.sqrt(ep)
            rec[k, 4, i] = sqp * np.sqrt(ea)
        if k == n_steps:
            break
        for s in range(4):
            if s == 0:
                sv[:] = v0
                sa[:] = alpha
                sz[:] = zeta
            else:
                h = coeffs[s] * dt
                sv[:] = v0 + h * dv[s - 1]
                sa[:] = alpha + h * da[s - 1]
                sz[:] = zeta + h * dz[s - 1]
                for i in range(N):
                    if not _refresh(i, sa[i], last_alpha, core, solve_count, rtol, ntol, maxiter):
                        req_alpha[:] = sa[i]
                        return NEED_COLD_SOLVE, k, i
            _ob_rhs(sv, sa, sz, S0, C0, alpha0, W, deg, mu_a, mu_z, p, core, dv[s], da[s], dz[s])
        w = dt / 6.0
        v0 += w * (dv[0] + 2.0 * dv[1] + 2.0 * dv[2] + dv[3])
        alpha += w * (da[0] + 2.0 * da[1] + 2.0 * da[2] + da[3])
        zeta += w * (dz[0] + 2.0 * dz[1] + 2.0 * dz[2] + dz[3])
        bad = False
        for x in alpha.ravel():
            if not abs(x) <= DIVERGENCE_LIMIT:
                bad = True
        for x in zeta.ravel():
            if not abs(x) <= DIVERGENCE_LIMIT:
                bad = True
        if bad:
            return DIVERGED, k + 1, -1
    return OK, n_steps, -1


@njit(cache=True)
def _sb_rhs(v0, S, C, v, S0, C0, W, deg, mu_s, mu_c, mu_v, dv0, dS, dC, dv):
    N, q, _ = S.shape
    dv0[:] = S0 @ v0
    for i in range(N):
        dS[i] = -deg[i] * S[i] + W[i, 0] * S0
        dC[i] = -deg[i] * C[i] + W[i, 0] * C0
        accv = -deg[i] * v[i] + W[i, 0] * v0
        for j in range(N):
            a = W[i, j + 1]
            if a != 0.0:
                dS[i] += a * S[j]
                dC[i] += a * C[j]
                accv += a * v[j]
        dS[i] *= mu_s
        dC[i] *= mu_c
        dv[i] = S[i] @ v[i] + mu_v * accv


@njit(cache=True)
def sb_run(n_steps, dt, v0, S, C, v, S0, C0, W, deg, mu_s, mu_c, mu_v, v0_exact, rec):
    """Integrate the state-based network; ``rec`` holds errors of ``(y, S, C, v)``."""
    N, q, _ = S.shape
    p = C.shape[1]
    dv0 = np.empty((4, q))
    dS = np.empty((4, N, q, q))
    dC = np.empty((4, N, p, q))
    dvv = np.empty((4, N, q))
    coeffs = np.array([0.0, 0.5, 0.5, 1.0])
    for k in range(n_steps + 1):
        vex = v0_exact[k]
        yex = C0 @ vex
        for i in range(N):
            ey = C[i] @ v[i] - yex
            rec[k, 0, i] = np.sqrt(np.sum(ey * ey))
            rec[k, 1, i] = np.sqrt(np.sum((S[i] - S0) ** 2))
            rec[k, 2, i] = np.sqrt(np.sum((C[i] - C0) ** 2))
            rec[k, 3, i] = np.sqrt(np.sum((v[i] - vex) ** 2))
        if k == n_steps:
            break
        for s in range(4):
            if s == 0:
                _sb_rhs(v0, S, C, v, S0, C0, W, deg, mu_s, mu_c, mu_v, dv0[s], dS[s], dC[s], dvv[s])
            else:
                h = coeffs[s] * dt
                _sb_rhs(v0 + h * dv0[s - 1], S + h * dS[s - 1], C + h * dC[s - 1], v + h * dvv[s - 1],
                        S0, C0, W, deg, mu_s, mu_c, mu_v, dv0[s], dS[s], dC[s], dvv[s])
        w = dt / 6.0
        v0 += w * (dv0[0] + 2.0 * dv0[1] + 2.0 * dv0[2] + dv0[3])
        S += w * (dS[0] + 2.0 * dS[1] + 2.0 * dS[2] + dS[3])
        C += w * (dC[0] + 2.0 * dC[1] + 2.0 * dC[2] + dC[3])
        v += w * (dvv[0] + 2.0 * dvv[1] + 2.0 * dvv[2] + dvv[3])
        if not (np.all(np.abs(S) <= DIVERGENCE_LIMIT) and np.all(np.abs(C) <= DIVERGENCE_LIMIT)
                and np.all(np.abs(v) <= DIVERGENCE_LIMIT)):
            return DIVERGED, k + 1
    return OK, n_steps
