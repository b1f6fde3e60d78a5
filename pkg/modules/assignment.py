"""
Assignment Module

Defender-to-attacker assignment by linear bottleneck assignment (LBAP) over
the 1v1 pair costs phi_ij, identification of the critical pair, and the
nominal team strategy in which every assigned pair plays its 1v1 equilibrium.
"""

import logging
from dataclasses import dataclass
from itertools import permutations
from typing import Dict, List, Tuple

import numpy as np

from modules.engagement import SpeedLike, apollonius, capture_point
from modules.errors import DegenerateDirection
from modules.geom import Point2, unit_vector
from modules.state import Controls, GameState

logger = logging.getLogger(__name__)

MAX_LBAP_SIZE = 8


# =============================================================================
# TYPES
# =============================================================================

@dataclass(frozen=True)
class CostMatrix:
    """phi[i, j]: equilibrium miss distance of attacker i against defender j"""
    phi: np.ndarray

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float)
        if phi.ndim != 2 or phi.shape[0] != phi.shape[1]:
            raise ValueError(f"Cost matrix must be square, got shape {phi.shape}")
        if not np.all(np.isfinite(phi)):
            raise ValueError("Cost matrix entries must be finite")
        if np.any(phi < 0):
            raise ValueError("Cost matrix entries must be >= 0")
        object.__setattr__(self, "phi", phi)

    @property
    def n(self) -> int:
        return self.phi.shape[0]

    def to_list(self) -> List[List[float]]:
        return self.phi.tolist()


@dataclass(frozen=True)
class Assignment:
    """
    psi[i] is the defender assigned to attacker i (0-based). The critical pair
    (critical_attacker, critical_defender) attains the bottleneck value.
    """
    psi: Tuple[int, ...]
    value: float
    critical_attacker: int
    critical_defender: int

    @property
    def pairing(self) -> Dict[int, int]:
        return {i: j for i, j in enumerate(self.psi)}

    @property
    def psi_one_based(self) -> List[int]:
        return [j + 1 for j in self.psi]


@dataclass(frozen=True)
class Roles:
    """2v2 relabeling: the critical pair plays as pair 1, the other as pair 2"""
    critical_attacker: int
    critical_defender: int
    support_attacker: int
    support_defender: int


# =============================================================================
# COSTS AND LBAP
# =============================================================================

def build_cost_matrix(state: GameState, nu: SpeedLike) -> CostMatrix:
    """
    Pair costs for every attacker-defender combination.

    Raises:
        CoincidentAgents: if some attacker and defender coincide
    """
    n_att = len(state.attackers)
    n_def = len(state.defenders)
    phi = np.zeros((n_att, n_def))
    for i in range(n_att):
        for j in range(n_def):
            ac = apollonius(state.attacker(i), state.defender(j), nu)
            phi[i, j] = capture_point(ac, state.target).distance_to_target
    return CostMatrix(phi)


def solve_lbap(costs: CostMatrix) -> Assignment:
    """
    Exhaustive max-min assignment.

    Permutations are enumerated in lexicographic order and only a strictly
    better bottleneck replaces the incumbent, so ties resolve to the
    lexicographically smallest psi. The critical attacker is the lowest index
    attaining the bottleneck.

    Raises:
        ValueError: if the matrix is larger than MAX_LBAP_SIZE
    """
    n = costs.n
    if n > MAX_LBAP_SIZE:
        raise ValueError(f"Exhaustive LBAP supports n <= {MAX_LBAP_SIZE}, got {n}")

    perms = np.array(list(permutations(range(n))), dtype=int)
    assigned = costs.phi[np.arange(n), perms]
    bottlenecks = assigned.min(axis=1)
    best = int(np.argmax(bottlenecks))

    psi = tuple(int(j) for j in perms[best])
    critical = int(np.argmin(assigned[best]))
    assignment = Assignment(
        psi=psi,
        value=float(bottlenecks[best]),
        critical_attacker=critical,
        critical_defender=psi[critical],
    )
    logger.debug(f"LBAP psi={assignment.psi_one_based} value={assignment.value:.6f}")
    return assignment


def critical_roles(assign: Assignment) -> Roles:
    """
    Raises:
        ValueError: if the assignment is not 2v2
    """
    if len(assign.psi) != 2:
        raise ValueError(f"Critical roles are defined for 2v2 only, got n={len(assign.psi)}")
    support = 1 - assign.critical_attacker
    return Roles(
        critical_attacker=assign.critical_attacker,
        critical_defender=assign.critical_defender,
        support_attacker=support,
        support_defender=assign.psi[support],
    )


def defender_win_condition(costs: CostMatrix, assign: Assignment) -> bool:
    """True iff the target lies outside every assigned pair's Apollonius circle"""
    return all(costs.phi[i, j] > 0.0 for i, j in enumerate(assign.psi))


# =============================================================================
# NOMINAL STRATEGIES
# =============================================================================

def pair_controls(attacker: Point2, defender: Point2, target: Point2, nu: SpeedLike) -> Tuple[Point2, Point2]:
    """
    Equilibrium controls of one pair, both aimed at the pair's current x_B.
    An agent already on x_B gets zero control.
    """
    aim = capture_point(apollonius(attacker, defender, nu), target).point
    zero = Point2(0.0, 0.0)

    try:
        u = unit_vector(attacker, aim)
    except DegenerateDirection:
        logger.debug("Attacker sits on its capture point, zero control")
        u = zero
    try:
        v = unit_vector(defender, aim)
    except DegenerateDirection:
        logger.debug("Defender sits on its capture point, zero control")
        v = zero
    return u, v


def nominal_controls(state: GameState, assign: Assignment, nu: SpeedLike) -> Controls:
    """
    Controls under the frozen assignment. Only pairs whose attacker and
    defender are both active move; every other agent gets zero control.
    """
    attackers = list(Controls.zeros(len(state.attackers), 0).attackers)
    defenders = list(Controls.zeros(0, len(state.defenders)).defenders)

    for i, j in assign.pairing.items():
        if not (state.attackers[i].active and state.defenders[j].active):
            continue
        attackers[i], defenders[j] = pair_controls(state.attacker(i), state.defender(j), state.target, nu)

    return Controls(tuple(attackers), tuple(defenders))
