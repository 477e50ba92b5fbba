"""Adaptive distributed observers for leader-follower networks.

Two observer families are provided: the state-based adaptive distributed
observer, and the output-based one that estimates only the leader's
minimal-polynomial coefficients and output derivatives.
"""

from .engine import (
    InitSpec,
    Scenario,
    SimulationTrace,
    estimate_rate,
    integrate,
    reference_scenario,
    simulate,
    verify_phi_hurwitz,
    verify_salpha_hurwitz,
)
from .graphnet import Digraph, build_network_matrices, has_spanning_tree, is_m_matrix
from .leader import LeaderSystem, canonical_lift, companion, leader_trajectory, minimal_polynomial
from .observers import Gains, check_gain_conditions, observer_costs
from .riccati import CareProblem, GainCache, gain, scheduled_gain, solve_care

__version__ = "0.1.0"
