"""Right-hand sides of the two adaptive distributed observers.

Both families are written agent by agent, exactly as each follower would
evaluate them from its own state and its in-neighbours' broadcasts.  The
engine integrates an equivalent compiled form; these functions are the
reference it is tested against.

* state based: every follower estimates ``(S0, C0, v0)`` directly;
* output based: every follower estimates the minimal-polynomial
  coefficients ``alpha0`` and the lifted output state ``zeta0`` and only
  ever hears ``(alpha_j, y_j)`` from its neighbours.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import AssumptionError, DimensionError
from .leader import companion
from .riccati import GainCache, scheduled_gain

STATE_BASED = "state_based"
OUTPUT_BASED = "output_based"
KINDS = (STATE_BASED, OUTPUT_BASED)


@dataclass
class StateAgent:
    S: np.ndarray
    C: np.ndarray
    v: np.ndarray

    @property
    def y(self):
        return self.C @ self.v


@dataclass
class OutputAgent:
    alpha: np.ndarray
    zeta: np.ndarray
    gain_cache: GainCache = field(default_factory=GainCache)

    def y(self, p):
        return self.zeta[:p]


@dataclass(frozen=True)
class Gains:
    mu_alpha: float = 10.0
    mu_zeta: float = 200.0
    mu_s: float = None
    mu_c: float = None
    mu_v: float = None

    def __post_init__(self):
        for name in ("mu_alpha", "mu_zeta", "mu_s", "mu_c", "mu_v"):
            val = getattr(self, name)
            if val is not None and not val > 0:
                raise ValueError(f"{name} must be positive, got {val}")

    def state_gains(self):
        """``(mu_s, mu_c, mu_v)``.

        Unset matrix gains fall back to ``mu_alpha`` and an unset ``mu_v`` to
        ``mu_zeta``, so both observers run with matching consensus strengths.
        """
        return (
            self.mu_alpha if self.mu_s is None else self.mu_s,
            self.mu_alpha if self.mu_c is None else self.mu_c,
            self.mu_zeta if self.mu_v is None else self.mu_v,
        )


class Payload(NamedTuple):
    """What a node broadcasts to its out-neighbours in the output-based scheme."""

    alpha: np.ndarray
    y: np.ndarray

    @property
    def size(self):
        return self.alpha.size + self.y.size


@dataclass(frozen=True)
class ObserverCosts:
    kind: str
    dimension: int
    payload: int
    breakdown: dict


def observer_costs(kind, q=None, p=None, n=None):
    """Per-agent state dimension and per-link broadcast size (real scalars)."""
    if kind == STATE_BASED:
        parts = {"S_i": q * q, "C_i": p * q, "v_i": q}
        return ObserverCosts(kind, sum(parts.values()), sum(parts.values()), parts)
    if kind == OUTPUT_BASED:
        dims = {"alpha_i": n, "zeta_i": p * n}
        sent = {"alpha_i": n, "y_i": p}
        return ObserverCosts(kind, sum(dims.values()), sum(sent.values()),
                             {"dimension": dims, "payload": sent})
    raise ValueError(f"unknown observer kind {kind!r}")


def _check_count(items, g, what):
    if len(items) != g.n_followers:
        raise DimensionError(f"expected {g.n_followers} {what}, got {len(items)}")


def state_observer_rhs(agents, leader, v0, g, gains):
    """Derivatives of every follower's ``(S_i, C_i, v_i)``, returned as StateAgents.

    The leader takes part as node 0 with its true ``(S0, C0, v0)``.
    """
    _check_count(agents, g, "state agents")
    mu_s, mu_c, mu_v = gains.state_gains()
    nodes = [StateAgent(leader.S0, leader.C0, np.asarray(v0, dtype=float))] + list(agents)
    out = []
    for i, ag in enumerate(agents, start=1):
        if ag.S.shape != leader.S0.shape or ag.C.shape != leader.C0.shape or ag.v.shape != (leader.q,):
            raise DimensionError(f"agent {i} dimensions do not match the leader")
        dS = np.zeros_like(ag.S)
        dC = np.zeros_like(ag.C)
        dv = ag.S @ ag.v
        for j in g.neighbors(i):
            a = g.weights[i - 1, j]
            dS += mu_s * a * (nodes[j].S - ag.S)
            dC += mu_c * a * (nodes[j].C - ag.C)
            dv += mu_v * a * (nodes[j].v - ag.v)
        out.append(StateAgent(dS, dC, dv))
    return out


def output_observer_alpha_rhs(alphas, alpha0, g, mu_alpha):
    """``alpha_i' = mu_alpha * sum_j a_ij (alpha_j - alpha_i)`` with node 0 holding ``alpha0``."""
    _check_count(alphas, g, "coefficient vectors")
    nodes = [np.asarray(alpha0, dtype=float)] + [np.asarray(a, dtype=float) for a in alphas]
    n = nodes[0].size
    out = []
    for i in range(1, g.n_followers + 1):
        if nodes[i].shape != (n,):
            raise DimensionError(f"agent {i} coefficient vector has shape {nodes[i].shape}, expected ({n},)")
        d = np.zeros(n)
        for j in g.neighbors(i):
            d += g.weights[i - 1, j] * (nodes[j] - nodes[i])
        out.append(mu_alpha * d)
    return out


def broadcasts(agents, alpha0, y0, p):
    """Payloads of nodes ``0..N``; node 0 is the leader."""
    return [Payload(np.asarray(alpha0, dtype=float), np.asarray(y0, dtype=float))] + [
        Payload(ag.alpha, ag.y(p)) for ag in agents]


def neighbor_payloads(i, g, payloads):
    """The only view of the network that follower ``i`` gets: ``{j: payload_j}`` for its in-neighbours."""
    return {j: payloads[j] for j in g.neighbors(i)}


def _zeta_dot(agent, inbox, weights, mu_zeta, p):
    n = agent.alpha.size
    if agent.zeta.shape != (n * p,):
        raise DimensionError(f"zeta has shape {agent.zeta.shape}, expected ({n * p},)")
    F, _ = scheduled_gain(agent.alpha, agent.gain_cache, p)
    y_i = agent.y(p)
    innovation = np.zeros(p)
    for j, msg in inbox.items():
        innovation += weights[j] * (msg.y - y_i)
    return companion(agent.alpha, p) @ agent.zeta + mu_zeta * (F @ innovation)


def output_observer_zeta_rhs(agents, y0, g, mu_zeta, p, alpha0=None):
    """``zeta_i' = S_i zeta_i + mu_zeta F_i sum_j a_ij (y_j - y_i)``.

    ``S_i = companion(alpha_i) kron I_p`` and ``F_i = P_i C^T`` from each
    agent's own Riccati cache.  Agent ``i`` sees nothing but its own state and
    its in-neighbours' payloads.  ``alpha0`` only fills the leader payload and
    does not enter this equation.
    """
    _check_count(agents, g, "output agents")
    n = agents[0].alpha.size
    a0 = np.zeros(n) if alpha0 is None else alpha0
    payloads = broadcasts(agents, a0, y0, p)
    return [
        _zeta_dot(ag, neighbor_payloads(i, g, payloads), g.weights[i - 1], mu_zeta, p)
        for i, ag in enumerate(agents, start=1)
    ]


@dataclass(frozen=True)
class GainCheck:
    name: str
    value: float
    threshold: float
    passed: bool
    note: str = ""


@dataclass(frozen=True)
class GainReport:
    checks: tuple
    delta_bar_S0: float
    delta_H: float
    mu_alpha_free: bool

    @property
    def all_passed(self):
        return all(c.passed for c in self.checks)

    def failed(self):
        return [c for c in self.checks if not c.passed]

    def to_dict(self):
        return {
            "all_passed": self.all_passed,
            "delta_bar_S0": self.delta_bar_S0,
            "delta_H": self.delta_H,
            "mu_alpha_free": self.mu_alpha_free,
            "checks": [c.__dict__ for c in self.checks],
        }


def check_gain_conditions(gains, delta_bar_S0, delta_H, kinds=KINDS):
    """Compare gains with the sufficient conditions for convergence.

    Output based: ``mu_alpha > delta_bar_S0 / delta_H`` and ``mu_zeta > 1 / delta_H``.
    State based: ``mu_s, mu_c, mu_v > delta_bar_S0 / delta_H``.  When no
    eigenvalue of ``S0`` has positive real part the coefficient bound
    relaxes to any positive gain.
    """
    if not delta_H > 0:
        raise AssumptionError(f"delta_H = {delta_H:.3g} <= 0: no spanning tree rooted at the leader")
    mu_alpha_free = delta_bar_S0 <= 0
    rate_bound = max(delta_bar_S0, 0.0) / delta_H
    note = "any positive gain suffices (no unstable leader modes)" if mu_alpha_free else ""
    checks = []
    if OUTPUT_BASED in kinds:
        checks.append(GainCheck("mu_alpha", gains.mu_alpha, rate_bound, gains.mu_alpha > rate_bound, note))
        checks.append(GainCheck("mu_zeta", gains.mu_zeta, 1.0 / delta_H, gains.mu_zeta > 1.0 / delta_H))
    if STATE_BASED in kinds:
        for name, val in zip(("mu_s", "mu_c", "mu_v"), gains.state_gains()):
            checks.append(GainCheck(name, val, rate_bound, val > rate_bound, note))
    return GainReport(tuple(checks), float(delta_bar_S0), float(delta_H), mu_alpha_free)
