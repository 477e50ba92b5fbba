"""Scenario integration, error traces, decay-rate fits and spectral checks."""

import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .errors import AssumptionError, DivergenceError, NumericalError
from .graphnet import Digraph, build_network_matrices, has_spanning_tree
from .leader import CanonicalLift, LeaderSystem, canonical_lift, companion, leader_states, output_selector
from .numerics import kron, real_part_bounds, spectrum
from .observers import OUTPUT_BASED, STATE_BASED, Gains, check_gain_conditions
from .riccati import NEWTON_MAXITER, NEWTON_TOL, RECOMPUTE_TOL, CareProblem, solve_care

log = logging.getLogger(__name__)

#: largest ``dt * |lambda|`` on the negative real axis for which classical RK4 is stable
RK4_STABILITY = 2.785

SERIES = {
    OUTPUT_BASED: ("err_y", "err_alpha", "err_zeta", "err_P", "err_S"),
    STATE_BASED: ("err_y", "err_S", "err_C", "err_v"),
}


@dataclass(frozen=True, eq=False)
class InitSpec:
    """Initial follower states: explicit values or uniform draws from ``range``.

    ``values`` maps state names (``alpha``, ``zeta`` or ``S``, ``C``, ``v``)
    to arrays with a leading follower axis.  Anything not given is drawn.
    """

    range: tuple = (-1.0, 1.0)
    seed: int = 0
    values: dict = field(default_factory=dict)

    def __post_init__(self):
        lo, hi = self.range
        if not lo <= hi:
            raise ValueError(f"init range must satisfy lo <= hi, got {self.range}")


@dataclass(frozen=True, eq=False)
class Scenario:
    leader: LeaderSystem
    graph: Digraph
    gains: Gains = field(default_factory=Gains)
    observer_kind: str = OUTPUT_BASED
    init: InitSpec = field(default_factory=InitSpec)
    dt: float = 1e-4
    t_final: float = 20.0
    recompute_tol: float = RECOMPUTE_TOL

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_final >= self.dt:
            raise ValueError("t_final must be at least dt")
        if self.observer_kind not in (OUTPUT_BASED, STATE_BASED, "both"):
            raise ValueError(f"unknown observer kind {self.observer_kind!r}")

    @property
    def n_steps(self):
        return int(round(self.t_final / self.dt))

    def kinds(self):
        return (STATE_BASED, OUTPUT_BASED) if self.observer_kind == "both" else (self.observer_kind,)

    def with_(self, **changes):
        return replace(self, **changes)


@dataclass(eq=False)
class SimulationTrace:
    kind: str
    times: np.ndarray
    series: dict
    riccati_solve_counts: np.ndarray
    wall_time: float = 0.0
    warnings: list = field(default_factory=list)

    @property
    def n_agents(self):
        return next(iter(self.series.values())).shape[1]

    def terminal(self):
        """Final value of every series, ``{name: array(N)}``."""
        return {name: s[-1].copy() for name, s in self.series.items()}

    def stacked(self, name):
        """Network-wide norm ``sqrt(sum_i ||e_i||^2)`` of one series."""
        return np.sqrt(np.sum(self.series[name] ** 2, axis=1))


@dataclass(frozen=True)
class RateEstimate:
    rate: float
    window: tuple
    r2: float
    samples: int


def reference_leader():
    """Leader of the worked example: three harmonic modes at 0, 1 and 2 rad/s."""
    S0 = np.zeros((5, 5))
    S0[1, 2], S0[2, 1] = 1.0, -1.0
    S0[3, 4], S0[4, 3] = 2.0, -2.0
    C0 = np.array([[0.5, 0, 0, 0, 0], [0, 1, 0, 0, 0], [0, 0, 0, 0, 2]], dtype=float)
    return LeaderSystem(S0, C0, np.array([1.0, 0, 1, 0, 1]))


#: leader-rooted chain 0->1->2->3->4 closed by 4->1
REFERENCE_EDGES = ((0, 1), (1, 2), (2, 3), (3, 4), (4, 1))


def reference_scenario(seed=0, **overrides):
    """Worked-example leader on the reference topology with ``mu_alpha=10``, ``mu_zeta=200``."""
    scn = Scenario(
        leader=reference_leader(),
        graph=Digraph.from_edges(4, REFERENCE_EDGES),
        gains=Gains(mu_alpha=10.0, mu_zeta=200.0),
        observer_kind=OUTPUT_BASED,
        init=InitSpec(range=(-1.0, 1.0), seed=seed),
        dt=1e-4,
        t_final=20.0,
    )
    return scn.with_(**overrides) if overrides else scn


def _draw(init, name, shape, rng):
    if name in init.values:
        arr = np.array(init.values[name], dtype=float)
        if arr.shape != shape:
            raise ValueError(f"initial {name} has shape {arr.shape}, expected {shape}")
        return arr
    lo, hi = init.range
    return rng.uniform(lo, hi, size=shape)


def initial_states(scn, kind, lift=None):
    """Initial follower arrays for ``kind``; deterministic in ``scn.init.seed``."""
    rng = np.random.default_rng(scn.init.seed)
    N, q, p = scn.graph.n_followers, scn.leader.q, scn.leader.p
    if kind == OUTPUT_BASED:
        lift = lift or canonical_lift(scn.leader)
        n = lift.n
        return {"alpha": _draw(scn.init, "alpha", (N, n), rng),
                "zeta": _draw(scn.init, "zeta", (N, n * p), rng)}
    return {"S": _draw(scn.init, "S", (N, q, q), rng),
            "C": _draw(scn.init, "C", (N, p, q), rng),
            "v": _draw(scn.init, "v", (N, q), rng)}


def stability_step_limit(scn, lift=None):
    """Largest RK4-stable ``dt`` estimated from the converged error dynamics."""
    net = build_network_matrices(scn.graph)
    radius = 0.0
    for kind in scn.kinds():
        if kind == OUTPUT_BASED:
            lift = lift or canonical_lift(scn.leader)
            M = salpha_matrix(lift, net.H, scn.gains.mu_zeta)
            rad = np.max(np.abs(spectrum(M)))
            rad = max(rad, scn.gains.mu_alpha * np.max(np.abs(spectrum(net.H))))
        else:
            mu_s, mu_c, mu_v = scn.gains.state_gains()
            hmax = np.max(np.abs(spectrum(net.H))) if net.H.size else 0.0
            rad = max(mu_s, mu_c, mu_v) * hmax + np.linalg.norm(scn.leader.S0, 2)
        radius = max(radius, rad)
    return RK4_STABILITY / radius if radius > 0 else np.inf


def _divergence(kind, k, scn):
    t = k * scn.dt
    return DivergenceError(f"{kind} observer diverged (|state| > {_kernels.DIVERGENCE_LIMIT:g}) at t = {t:.6g}", time=t)


def _integrate_output(scn, lift, v_exact):
    N, p, n = scn.graph.n_followers, scn.leader.p, lift.n
    K = scn.n_steps
    init = initial_states(scn, OUTPUT_BASED, lift)
    alpha, zeta = init["alpha"].copy(), init["zeta"].copy()
    v0 = scn.leader.v0_init.copy()
    W = np.ascontiguousarray(scn.graph.weights)
    deg = scn.graph.in_degree.copy()
    core0 = solve_care(CareProblem(companion(lift.alpha0), output_selector(n, 1))).P
    last_alpha = np.empty((N, n))
    core = np.empty((N, n, n))
    counts = np.zeros(N, dtype=np.int64)

    def cold(i, a, k):
        try:
            sol = solve_care(CareProblem(companion(a), output_selector(n, 1)))
        except (NumericalError, ValueError) as exc:
            raise NumericalError(f"Riccati solve failed for agent {i + 1} at t = {k * scn.dt:.6g}: {exc}") from exc
        core[i] = sol.P
        last_alpha[i] = a
        counts[i] += 1

    for i in range(N):
        cold(i, alpha[i].copy(), 0)
    rec = np.empty((K + 1, 5, N))
    req = np.empty(n)
    k = 0
    while True:
        status, k, agent = _kernels.ob_run(
            k, K, scn.dt, v0, alpha, zeta, scn.leader.S0, scn.leader.C0, lift.alpha0, W, deg,
            scn.gains.mu_alpha, scn.gains.mu_zeta, p, last_alpha, core, counts,
            scn.recompute_tol, NEWTON_TOL, NEWTON_MAXITER, v_exact, lift.output_map, core0, rec, req)
        if status == _kernels.OK:
            break
        if status == _kernels.DIVERGED:
            raise _divergence(OUTPUT_BASED, k, scn)
        cold(agent, req.copy(), k)
    names = SERIES[OUTPUT_BASED]
    return {name: rec[:, c, :] for c, name in enumerate(names)}, counts


def _integrate_state(scn, v_exact):
    K = scn.n_steps
    init = initial_states(scn, STATE_BASED)
    S, C, v = (np.ascontiguousarray(init[x]).copy() for x in ("S", "C", "v"))
    v0 = scn.leader.v0_init.copy()
    mu_s, mu_c, mu_v = scn.gains.state_gains()
    rec = np.empty((K + 1, 4, scn.graph.n_followers))
    status, k = _kernels.sb_run(
        K, scn.dt, v0, S, C, v, scn.leader.S0, scn.leader.C0,
        np.ascontiguousarray(scn.graph.weights), scn.graph.in_degree.copy(), mu_s, mu_c, mu_v, v_exact, rec)
    if status == _kernels.DIVERGED:
        raise _divergence(STATE_BASED, k, scn)
    names = SERIES[STATE_BASED]
    return {name: rec[:, c, :] for c, name in enumerate(names)}, np.zeros(scn.graph.n_followers, dtype=np.int64)


def integrate(scn, kind=None):
    """Fixed-step RK4 simulation of leader plus followers.

    Errors are measured against the exact leader trajectory.  Violated gain
    conditions and a too-large ``dt`` only produce warnings.

    Parameters
    ----------
    scn : Scenario
    kind : str, optional
        Observer family; defaults to ``scn.observer_kind``, which must then
        not be ``"both"``.

    Returns
    -------
    SimulationTrace
    """
    kind = kind or scn.observer_kind
    if kind == "both":
        raise ValueError("integrate() runs one observer kind; use simulate() for both")
    if not has_spanning_tree(scn.graph):
        raise AssumptionError("communication graph has no spanning tree rooted at the leader")
    warnings = []
    net = build_network_matrices(scn.graph)
    report = check_gain_conditions(scn.gains, real_part_bounds(scn.leader.S0)[0], net.delta_H, kinds=(kind,))
    for c in report.failed():
        warnings.append(f"{c.name} = {c.value:g} does not exceed the sufficient bound {c.threshold:g}")
    lift = canonical_lift(scn.leader) if kind == OUTPUT_BASED else None
    limit = stability_step_limit(scn.with_(observer_kind=kind), lift)
    if scn.dt > limit:
        warnings.append(f"dt = {scn.dt:g} exceeds the estimated RK4 stability limit {limit:.3g}")
    for w in warnings:
        log.warning(w)

    times = np.arange(scn.n_steps + 1) * scn.dt
    v_exact = np.ascontiguousarray(leader_states(scn.leader, times))
    start = time.perf_counter()
    if kind == OUTPUT_BASED:
        series, counts = _integrate_output(scn, lift, v_exact)
    else:
        series, counts = _integrate_state(scn, v_exact)
    wall = time.perf_counter() - start
    return SimulationTrace(kind, times, series, counts, wall, warnings)


def simulate(scn):
    """Run every observer kind the scenario asks for: ``{kind: SimulationTrace}``."""
    return {kind: integrate(scn, kind) for kind in scn.kinds()}


def integrate_leader(leader, dt, t_final):
    """RK4 integration of the leader alone; returns ``v0`` at ``t_final``."""
    v = leader.v0_init.copy()
    S = leader.S0
    for _ in range(int(round(t_final / dt))):
        k1 = S @ v
        k2 = S @ (v + 0.5 * dt * k1)
        k3 = S @ (v + 0.5 * dt * k2)
        k4 = S @ (v + dt * k3)
        v = v + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return v


def estimate_rate(series, times, window=None, floor=1e-14):
    """Exponential decay rate from a least-squares fit of ``log(series)``.

    Parameters
    ----------
    series, times : array_like
        Positive samples and their times; values are clipped at ``floor``.
    window : tuple, optional
        ``(t_a, t_b)``; defaults to ``[0.2, 0.6] * times[-1]``.
    """
    series = np.asarray(series, dtype=float)
    times = np.asarray(times, dtype=float)
    if window is None:
        window = (0.2 * times[-1], 0.6 * times[-1])
    t_a, t_b = window
    mask = (times >= t_a) & (times <= t_b)
    if mask.sum() < 10:
        raise ValueError(f"fit window {window} holds {mask.sum()} samples, need at least 10")
    t = times[mask]
    y = np.log(np.clip(series[mask], floor, None))
    slope, intercept = np.polyfit(t, y, 1)
    ss_res = np.sum((y - (slope * t + intercept)) ** 2)
    ss_tot = np.sum((y - y.mean()) ** 2)
    flat = ss_tot <= (64 * np.finfo(float).eps * max(1.0, np.abs(y).max())) ** 2 * y.size
    r2 = 1.0 if flat else max(0.0, 1.0 - ss_res / ss_tot)
    return RateEstimate(rate=float(-slope), window=(float(t_a), float(t_b)), r2=float(r2), samples=int(mask.sum()))


@dataclass(frozen=True, eq=False)
class HurwitzReport:
    matrix: np.ndarray
    spectrum: np.ndarray
    abscissa: float
    hurwitz: bool
    P: np.ndarray = None
    threshold: float = None

    def to_dict(self):
        return {
            "abscissa": self.abscissa,
            "hurwitz": self.hurwitz,
            "threshold": self.threshold,
            "spectrum": [[float(z.real), float(z.imag)] for z in self.spectrum],
        }


def verify_phi_hurwitz(A, C, F, mu, margin=0.0):
    """Form ``Phi = I_N kron A - mu (F kron P C^T C)`` and test it.

    ``P`` solves ``P A^T + A P - P C^T C P + I = 0``.  ``margin`` is the
    distance from the axis required for a Hurwitz verdict.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    F = np.atleast_2d(np.asarray(F, dtype=float))
    dmin = real_part_bounds(F)[1]
    if not dmin > 0:
        raise AssumptionError(f"min Re sigma(F) = {dmin:.3g} is not positive")
    P = solve_care(CareProblem(A, C)).P
    Phi = kron(np.eye(F.shape[0]), A) - mu * kron(F, P @ C.T @ C)
    eig = spectrum(Phi)
    absc = float(eig.real.max())
    return HurwitzReport(Phi, eig, absc, absc < -margin, P=P, threshold=1.0 / dmin)


def salpha_matrix(lift, H, mu_zeta, P0=None):
    if P0 is None:
        P0 = solve_care(CareProblem(lift.S_script0, lift.C_script0)).P
    N = H.shape[0]
    Cs = lift.C_script0
    return kron(np.eye(N), lift.S_script0) - mu_zeta * kron(H, P0 @ Cs.T @ Cs)


def verify_salpha_hurwitz(lift, H, mu_zeta, margin=0.0):
    """Spectrum of the converged output-observer error matrix ``S_alpha``."""
    H = np.atleast_2d(np.asarray(H, dtype=float))
    dH = real_part_bounds(H)[1]
    if not dH > 0:
        raise AssumptionError(f"delta_H = {dH:.3g} is not positive")
    P0 = solve_care(CareProblem(lift.S_script0, lift.C_script0)).P
    M = salpha_matrix(lift, H, mu_zeta, P0)
    eig = spectrum(M)
    absc = float(eig.real.max())
    return HurwitzReport(M, eig, absc, absc < -margin, P=P0, threshold=1.0 / dH)
