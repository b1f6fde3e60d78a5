"""
Deviation Module

Attacker-team strategies that break the nominal 2v2 play. The support
attacker sacrifices itself to intercept the critical defender, either while
the critical attacker keeps playing its 1v1 equilibrium (one deviation) or
while the critical attacker heads straight for the target (two deviations).

Also builds the regions that bound the moving capture point and the pursuing
defender while the critical attacker runs straight at the target, and the
feasibility checks that decide whether an interception wins the game.
"""

import math
import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from modules.assignment import Assignment, Roles, build_cost_matrix, critical_roles, solve_lbap
from modules.config import (
    DEFAULT_CAPTURE_EPS,
    DEFAULT_DT,
    DEFAULT_T_MAX,
    DEFAULT_TWO_DEVIATION_GRID,
    DEGENERACY_TOL,
    MEMBERSHIP_TOL,
)
from modules.engagement import (
    ApolloniusCircle,
    SpeedLike,
    apollonius,
    as_speed_ratio,
    capture_point,
)
from modules.errors import (
    DegenerateDirection,
    DegenerateGeometry,
    Infeasible,
    NonConvergence,
    TargetInsideCircle,
)
from modules.geom import (
    AnnularSector,
    HalfPlane,
    Point2,
    Segment,
    Triangle,
    advance,
    distance,
    in_annular_sector,
    in_half_plane,
    in_triangle,
    lerp,
    segment_circle_intersections,
    segment_hits_disks,
    unit_vector,
)
from modules.state import GameState

logger = logging.getLogger(__name__)

BISECTION_STEPS = 50


# =============================================================================
# TYPES
# =============================================================================

class DeviationMode(str, Enum):
    ONE = "one-deviation"
    TWO = "two-deviation"


class InterceptSelection(str, Enum):
    """Which end of the first feasible stretch of the defender's path to use"""
    EARLIEST = "earliest"
    LATEST = "latest"


@dataclass(frozen=True)
class InterceptPlan:
    """
    Where the support attacker meets the critical defender.

    eta_attacker is the attacker's straight-line travel time to `point`,
    eta_defender the time the defender needs along its anticipated path.
    Both are game time.
    """
    point: Point2
    eta_attacker: float
    eta_defender: float
    mode: DeviationMode
    attacker: int
    defender: int

    def __post_init__(self):
        if self.eta_attacker > self.eta_defender + MEMBERSHIP_TOL:
            raise Infeasible(
                f"Attacker arrives after the defender "
                f"({self.eta_attacker:.6f} > {self.eta_defender:.6f})"
            )


@dataclass(frozen=True)
class DefenderTrajectory:
    """
    Anticipated path of the critical defender while the critical attacker
    runs straight at the target. Row k of each array is the state at times[k].

    terminal is "capture" when the defender catches the attacker and
    "target" when the attacker reaches the target first.
    """
    times: np.ndarray
    positions: np.ndarray
    attacker_positions: np.ndarray
    step: float
    terminal: str
    capture_point: Optional[Point2]

    def __len__(self) -> int:
        return len(self.times)

    def position(self, k: int) -> Point2:
        return Point2(float(self.positions[k, 0]), float(self.positions[k, 1]))

    def attacker_position(self, k: int) -> Point2:
        return Point2(float(self.attacker_positions[k, 0]), float(self.attacker_positions[k, 1]))


@dataclass(frozen=True)
class FeasibilityRegions:
    """
    Bounds on the critical pair while the critical attacker runs straight at
    the target.

    omega_B: annular sector around the target between the safe circle and
        radius |T - P1|, clipped by the hull of target, circle centre and
        attacker.
    omega_D1, omega_D2: triangles bounding the defender. omega_D2 excludes
        the disk of radius |T - P1| around the target.
    """
    target: Point2
    capture_point: Point2
    circle: ApolloniusCircle
    safe_circle_radius: float
    rho_p1: float
    p1: Point2
    p2: Point2
    p3: Point2
    omega_B: AnnularSector
    omega_D1: Triangle
    omega_D2: Triangle

    def contains_capture_point(self, p: Point2, tol: float = MEMBERSHIP_TOL) -> bool:
        """Membership in the closure of omega_B grown by tol"""
        return in_annular_sector(p, self.omega_B, tol)

    def in_omega_d(self, p: Point2, tol: float = MEMBERSHIP_TOL) -> bool:
        if in_triangle(p, self.omega_D1, tol):
            return True
        return in_triangle(p, self.omega_D2, tol) and distance(p, self.target) >= self.rho_p1 - tol

    def contains_defender(self, p: Point2, tol: float = MEMBERSHIP_TOL) -> bool:
        """Membership in the closure of omega_D united with omega_B"""
        return self.in_omega_d(p, tol) or self.contains_capture_point(p, tol)


@dataclass(frozen=True)
class TwoDeviationCheck:
    """Outcome of the discretized two-deviation check; truthy iff it holds"""
    holds: bool
    grid_n: int
    samples: int
    failures: int

    def __bool__(self) -> bool:
        return self.holds


# =============================================================================
# HELPERS
# =============================================================================

def _roles(state: GameState, nu: SpeedLike, assign: Optional[Assignment]) -> Roles:
    if assign is None:
        assign = solve_lbap(build_cost_matrix(state, nu))
    return critical_roles(assign)


def _bisect_boundary(
    feasible,
    p_in: Point2,
    t_in: float,
    p_out: Point2,
    t_out: float
) -> Tuple[Point2, float]:
    """
    Walk the segment between a feasible and an infeasible sample and return
    the feasible point closest to the switch.
    """
    lo, hi = 0.0, 1.0
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        if feasible(lerp(p_in, p_out, mid), t_in + mid * (t_out - t_in)):
            lo = mid
        else:
            hi = mid
    logger.debug(f"Bisection converged at s={lo:.3e}")
    return lerp(p_in, p_out, lo), t_in + lo * (t_out - t_in)


# =============================================================================
# ONE DEVIATION
# =============================================================================

def one_deviation_candidates(
    state: GameState,
    assign: Assignment,
    nu: SpeedLike
) -> List[Point2]:
    """
    Interception points for the support attacker while the critical pair
    plays its equilibrium.

    The critical defender runs straight at the stationary capture point x_B,
    so the candidates are the crossings of that segment with the boundary of
    the support attacker's circle against the critical defender, kept only
    where the critical defender is strictly closer than the support defender.

    Returns:
        Points ordered by the critical defender's arrival time; empty when no
        straight-line interception exists
    """
    roles = critical_roles(assign)
    d_c = state.defender(roles.critical_defender)
    d_s = state.defender(roles.support_defender)
    a_s = state.attacker(roles.support_attacker)

    x_b = capture_point(apollonius(state.attacker(roles.critical_attacker), d_c, nu), state.target).point
    ac_21 = apollonius(a_s, d_c, nu)
    closer_to_critical = HalfPlane(d_c, d_s)

    crossings = segment_circle_intersections(Segment(d_c, x_b), ac_21.circle)
    candidates = [p for p in crossings if in_half_plane(p, closer_to_critical)]
    logger.debug(f"One-deviation candidates: {[p.as_tuple() for p in candidates]}")
    return candidates


def one_deviation_plan(
    state: GameState,
    assign: Assignment,
    nu: SpeedLike,
    selection: InterceptSelection = InterceptSelection.EARLIEST
) -> InterceptPlan:
    """
    Straight-line interception plan built from the candidate the critical
    defender reaches first (or last, with LATEST).

    Raises:
        Infeasible: if there is no candidate
    """
    nu = as_speed_ratio(nu)
    candidates = one_deviation_candidates(state, assign, nu)
    if not candidates:
        raise Infeasible("No interception point on the critical defender's path")

    roles = critical_roles(assign)
    point = candidates[0] if selection == InterceptSelection.EARLIEST else candidates[-1]
    a_s = state.attacker(roles.support_attacker)
    d_c = state.defender(roles.critical_defender)

    # points on the circle boundary tie exactly; keep the plan consistent
    eta_defender = distance(d_c, point)
    eta_attacker = min(distance(a_s, point) / nu.nu, eta_defender)

    plan = InterceptPlan(
        point=point,
        eta_attacker=eta_attacker,
        eta_defender=eta_defender,
        mode=DeviationMode.ONE,
        attacker=roles.support_attacker,
        defender=roles.critical_defender,
    )
    logger.info(f"One-deviation plan: x_I={point.as_tuple()} eta={eta_defender:.4f}")
    return plan


def win_after_interception_precheck(state: GameState, assign: Assignment, nu: SpeedLike) -> bool:
    """
    Predictive win check at t = 0: with the critical defender and the support
    attacker gone, the target lies inside the circle of the critical attacker
    against the support defender.
    """
    roles = critical_roles(assign)
    ac = apollonius(state.attacker(roles.critical_attacker), state.defender(roles.support_defender), nu)
    return ac.contains(state.target)


def check_win_condition_after_interception(state_at_tf1: GameState, nu: SpeedLike) -> bool:
    """
    True iff the surviving attacker reaches the target against the surviving
    defender, i.e. the target is inside their circle.
    """
    attackers = state_at_tf1.active_attackers()
    defenders = state_at_tf1.active_defenders()
    if not attackers:
        return False
    if not defenders:
        return True
    if len(attackers) != 1 or len(defenders) != 1:
        raise ValueError(
            f"Expected one surviving pair, got {len(attackers)} attackers "
            f"and {len(defenders)} defenders"
        )
    ac = apollonius(state_at_tf1.attacker(attackers[0]), state_at_tf1.defender(defenders[0]), nu)
    return capture_point(ac, state_at_tf1.target).target_inside


# =============================================================================
# TWO DEVIATIONS
# =============================================================================

def precompute_defender_trajectory(
    state: GameState,
    nu: SpeedLike,
    step: float = DEFAULT_DT,
    assign: Optional[Assignment] = None,
    capture_eps: float = DEFAULT_CAPTURE_EPS,
    t_max: float = DEFAULT_T_MAX
) -> DefenderTrajectory:
    """
    Integrate the critical pair with the attacker heading straight at the
    target and the defender aiming at the moving capture point.

    Raises:
        NonConvergence: if neither capture nor target arrival happens by t_max
    """
    nu = as_speed_ratio(nu)
    roles = _roles(state, nu, assign)
    target = state.target
    a = state.attacker(roles.critical_attacker)
    d = state.defender(roles.critical_defender)

    times = [0.0]
    defender_path = [d.as_tuple()]
    attacker_path = [a.as_tuple()]
    zero = Point2(0.0, 0.0)
    t = 0.0
    k = 0
    terminal = None

    while True:
        if distance(a, d) <= capture_eps:
            terminal = "capture"
            break
        if distance(a, target) <= capture_eps:
            terminal = "target"
            break
        if t >= t_max:
            raise NonConvergence(f"Defender trajectory did not terminate by t={t_max}")

        aim = capture_point(apollonius(a, d, nu), target).point
        try:
            v = unit_vector(d, aim)
        except DegenerateDirection:
            v = zero
        u = unit_vector(a, target)

        a = advance(a, u, nu.nu, step)
        d = advance(d, v, 1.0, step)
        k += 1
        t = k * step
        times.append(t)
        defender_path.append(d.as_tuple())
        attacker_path.append(a.as_tuple())

    logger.info(f"Defender trajectory: {len(times)} samples, terminal={terminal} at t={t:.4f}")
    return DefenderTrajectory(
        times=np.array(times),
        positions=np.array(defender_path),
        attacker_positions=np.array(attacker_path),
        step=step,
        terminal=terminal,
        capture_point=a if terminal == "capture" else None,
    )


def two_deviation_plan(
    traj: DefenderTrajectory,
    state: GameState,
    nu: SpeedLike,
    assign: Optional[Assignment] = None,
    selection: InterceptSelection = InterceptSelection.LATEST
) -> InterceptPlan:
    """
    Interception point on the critical defender's anticipated path.

    A sample x at time t qualifies when it lies in both closed circles of the
    support attacker (against each defender) at t = 0 and the support
    attacker, moving straight at speed nu, gets there by t. The plan uses the
    first stretch of qualifying samples: its exit point with LATEST, its
    entry point with EARLIEST, each refined by bisection between samples.

    Raises:
        Infeasible: if no sample qualifies
    """
    nu = as_speed_ratio(nu)
    roles = _roles(state, nu, assign)
    a_s = state.attacker(roles.support_attacker)

    if distance(a_s, traj.position(0)) <= DEGENERACY_TOL:
        logger.info("Support attacker starts on the critical defender, intercepting at t=0")
        return InterceptPlan(
            point=traj.position(0),
            eta_attacker=0.0,
            eta_defender=0.0,
            mode=DeviationMode.TWO,
            attacker=roles.support_attacker,
            defender=roles.critical_defender,
        )

    ac_21 = apollonius(a_s, state.defender(roles.critical_defender), nu)
    ac_22 = apollonius(a_s, state.defender(roles.support_defender), nu)

    def feasible(x: Point2, t: float) -> bool:
        return (
            ac_21.contains(x, MEMBERSHIP_TOL)
            and ac_22.contains(x, MEMBERSHIP_TOL)
            and distance(a_s, x) / nu.nu <= t + MEMBERSHIP_TOL
        )

    flags = [feasible(traj.position(k), float(traj.times[k])) for k in range(len(traj))]
    if not any(flags):
        raise Infeasible("No point of the defender's path is reachable inside both circles")

    enter = flags.index(True)
    exit_ = enter
    while exit_ + 1 < len(flags) and flags[exit_ + 1]:
        exit_ += 1

    if selection == InterceptSelection.EARLIEST:
        point, t = traj.position(enter), float(traj.times[enter])
        if enter > 0:
            point, t = _bisect_boundary(
                feasible, point, t, traj.position(enter - 1), float(traj.times[enter - 1])
            )
    else:
        point, t = traj.position(exit_), float(traj.times[exit_])
        if exit_ + 1 < len(traj):
            point, t = _bisect_boundary(
                feasible, point, t, traj.position(exit_ + 1), float(traj.times[exit_ + 1])
            )

    plan = InterceptPlan(
        point=point,
        eta_attacker=min(distance(a_s, point) / nu.nu, t),
        eta_defender=t,
        mode=DeviationMode.TWO,
        attacker=roles.support_attacker,
        defender=roles.critical_defender,
    )
    logger.info(
        f"Two-deviation plan ({selection.value}): x_I={point.as_tuple()} "
        f"eta={t:.4f} feasible samples {enter}..{exit_}"
    )
    return plan


# =============================================================================
# REGIONS
# =============================================================================

def build_feasibility_regions(
    state: GameState,
    nu: SpeedLike,
    assign: Optional[Assignment] = None
) -> FeasibilityRegions:
    """
    Regions bounding the critical pair under the straight-to-target deviation.

    Raises:
        DegenerateGeometry: if the target is inside the critical circle or the
            attacker's path to the target does not cross the circle boundary
    """
    nu = as_speed_ratio(nu)
    roles = _roles(state, nu, assign)
    target = state.target
    a = state.attacker(roles.critical_attacker)
    d = state.defender(roles.critical_defender)

    ac = apollonius(a, d, nu)
    cp = capture_point(ac, target)
    if cp.target_inside:
        raise DegenerateGeometry("Target lies inside the critical pair's circle")

    crossings = segment_circle_intersections(Segment(a, target), ac.circle)
    if not crossings:
        raise DegenerateGeometry("Attacker's path to the target misses its circle boundary")
    p1 = crossings[-1]

    rho_t = cp.distance_to_target
    rho_p1 = max(distance(target, p1), rho_t)
    try:
        p2 = target + unit_vector(target, a) * rho_t
        p3 = target + unit_vector(target, cp.point) * rho_p1
    except DegenerateDirection as e:
        raise DegenerateGeometry(str(e)) from e

    omega_b = AnnularSector(target, rho_t, rho_p1, Triangle(target, ac.center, a))
    if omega_b.is_empty():
        logger.warning("Capture-point region is empty (radii coincide)")

    return FeasibilityRegions(
        target=target,
        capture_point=cp.point,
        circle=ac,
        safe_circle_radius=rho_t,
        rho_p1=rho_p1,
        p1=p1,
        p2=p2,
        p3=p3,
        omega_B=omega_b,
        omega_D1=Triangle(d, p1, p2),
        omega_D2=Triangle(d, p1, p3),
    )


def check_two_deviation_condition(
    regions: FeasibilityRegions,
    state: GameState,
    nu: SpeedLike,
    grid_n: int = DEFAULT_TWO_DEVIATION_GRID,
    assign: Optional[Assignment] = None
) -> TwoDeviationCheck:
    """
    Discretized two-deviation condition: for every capture point x the
    critical pair can end at, the critical defender's segment to x must pass
    through both circles of the support attacker.

    The capture-point region is sampled on a grid_n x grid_n polar grid
    (radii between the two region radii, angles between the rays toward the
    circle centre and toward the attacker), keeping the points inside the
    region's closure.

    Raises:
        ValueError: if grid_n < 16
    """
    if grid_n < 16:
        raise ValueError(f"grid_n must be >= 16, got {grid_n}")

    nu = as_speed_ratio(nu)
    roles = _roles(state, nu, assign)
    d_c = state.defender(roles.critical_defender)
    a_s = state.attacker(roles.support_attacker)
    disks = [
        apollonius(a_s, d_c, nu).circle,
        apollonius(a_s, state.defender(roles.support_defender), nu).circle,
    ]

    sector = regions.omega_B
    center = sector.center
    start = math.atan2(regions.circle.center.y - center.y, regions.circle.center.x - center.x)
    a_c = regions.circle.attacker
    sweep = math.atan2(a_c.y - center.y, a_c.x - center.x) - start
    sweep = (sweep + math.pi) % (2.0 * math.pi) - math.pi

    samples = 0
    failures = 0
    for r in np.linspace(sector.rho_inner, sector.rho_outer, grid_n):
        for theta in start + sweep * np.linspace(0.0, 1.0, grid_n):
            x = Point2(center.x + r * math.cos(theta), center.y + r * math.sin(theta))
            if not in_annular_sector(x, sector, MEMBERSHIP_TOL):
                continue
            samples += 1
            if not segment_hits_disks(Segment(d_c, x), disks):
                failures += 1

    if samples == 0:
        logger.warning("Two-deviation grid produced no samples inside the capture-point region")

    result = TwoDeviationCheck(holds=failures == 0, grid_n=grid_n, samples=samples, failures=failures)
    logger.info(f"Two-deviation condition: holds={result.holds} ({failures}/{samples} failures, grid {grid_n})")
    return result


def drift_normal(attacker: Point2, defender: Point2, target: Point2, nu: SpeedLike) -> Point2:
    """
    Unit normal at x_B to the segment from x_B to the circle centre, pointing
    to the attacker's side.

    Raises:
        TargetInsideCircle: if the target is inside the circle
    """
    ac = apollonius(attacker, defender, nu)
    cp = capture_point(ac, target)
    if cp.target_inside:
        raise TargetInsideCircle("No capture-point normal when the target is inside the circle")

    n = unit_vector(cp.point, ac.center).perp()
    if n.dot(attacker - cp.point) < 0.0:
        n = -n
    return n
