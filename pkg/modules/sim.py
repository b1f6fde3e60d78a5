"""
Simulation Module

Fixed-step integration of the 2v2 game through Phase I (team play until the
first capture or interception) and Phase II (the surviving pair plays its 1v1
equilibrium), with event detection, payoff evaluation and trace recording.

Time in this module is game time: attackers move at speed nu, defenders at
speed 1.
"""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from modules.assignment import (
    Assignment,
    CostMatrix,
    build_cost_matrix,
    critical_roles,
    defender_win_condition,
    pair_controls,
    solve_lbap,
)
from modules.config import (
    DEFAULT_CAPTURE_EPS,
    DEFAULT_DT,
    DEFAULT_RECORD_EVERY,
    DEFAULT_T_MAX,
    DEGENERACY_TOL,
)
from modules.deviation import (
    InterceptPlan,
    build_feasibility_regions,
    check_two_deviation_condition,
    win_after_interception_precheck,
    one_deviation_plan,
    precompute_defender_trajectory,
    two_deviation_plan,
)
from modules.engagement import SpeedLike, SpeedRatio, apollonius, as_speed_ratio, capture_point
from modules.errors import (
    DegenerateDirection,
    DegenerateGeometry,
    Infeasible,
    NonConvergence,
    SimulationTimeout,
)
from modules.geom import Point2, advance, distance, unit_vector
from modules.state import Controls, GameState

logger = logging.getLogger(__name__)

ZERO = Point2(0.0, 0.0)


# =============================================================================
# TYPES
# =============================================================================

class Mode(str, Enum):
    NOMINAL = "nominal"
    ONE_DEVIATION = "one-deviation"
    TWO_DEVIATION = "two-deviation"

    @classmethod
    def parse(cls, value) -> "Mode":
        if isinstance(value, Mode):
            return value
        aliases = {"one-dev": cls.ONE_DEVIATION, "two-dev": cls.TWO_DEVIATION}
        key = str(value).strip().lower()
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            choices = [m.value for m in cls] + list(aliases)
            raise ValueError(f"Unknown mode {value!r}; expected one of {choices}")


class StrategyTag(str, Enum):
    NOMINAL = "nominal"
    STRAIGHT_TO_TARGET = "straight-to-target"
    INTERCEPT = "intercept"
    DWELL = "dwell"
    ZERO = "zero"


@dataclass(frozen=True)
class AgentStrategy:
    tag: StrategyTag
    plan: Optional[InterceptPlan] = None

    def __post_init__(self):
        if self.tag in (StrategyTag.INTERCEPT, StrategyTag.DWELL) and self.plan is None:
            raise ValueError(f"{self.tag.value} strategy requires an interception plan")


NOMINAL = AgentStrategy(StrategyTag.NOMINAL)


@dataclass(frozen=True)
class StrategyProfile:
    attackers: Tuple[AgentStrategy, ...]
    defenders: Tuple[AgentStrategy, ...]

    @classmethod
    def nominal(cls, n_attackers: int = 2, n_defenders: int = 2) -> "StrategyProfile":
        return cls((NOMINAL,) * n_attackers, (NOMINAL,) * n_defenders)

    @classmethod
    def for_deviation(
        cls,
        assign: Assignment,
        plan: InterceptPlan,
        critical_straight: bool
    ) -> "StrategyProfile":
        """Support attacker intercepts; the critical attacker stays nominal or runs at the target"""
        roles = critical_roles(assign)
        attackers = [NOMINAL, NOMINAL]
        attackers[roles.support_attacker] = AgentStrategy(StrategyTag.INTERCEPT, plan)
        if critical_straight:
            attackers[roles.critical_attacker] = AgentStrategy(StrategyTag.STRAIGHT_TO_TARGET)
        return cls(tuple(attackers), (NOMINAL, NOMINAL))

    def with_attacker(self, i: int, strategy: AgentStrategy) -> "StrategyProfile":
        attackers = list(self.attackers)
        attackers[i] = strategy
        return replace(self, attackers=tuple(attackers))

    def validate(self, state: GameState):
        if len(self.attackers) != len(state.attackers) or len(self.defenders) != len(state.defenders):
            raise ValueError("Strategy profile does not match the number of agents")


@dataclass(frozen=True)
class SimConfig:
    dt: float = DEFAULT_DT
    capture_eps: float = DEFAULT_CAPTURE_EPS
    t_max: float = DEFAULT_T_MAX
    record_every: int = DEFAULT_RECORD_EVERY

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not self.capture_eps > 0:
            raise ValueError(f"capture_eps must be > 0, got {self.capture_eps}")
        if not self.t_max > 0:
            raise ValueError(f"t_max must be > 0, got {self.t_max}")
        if self.record_every < 1:
            raise ValueError(f"record_every must be >= 1, got {self.record_every}")
        # two agents closing at up to 1 + nu < 2 cannot jump the capture radius
        if self.dt > self.capture_eps / 2:
            raise ValueError(f"dt ({self.dt}) must be <= capture_eps / 2 ({self.capture_eps / 2})")


class EventKind(str, Enum):
    CAPTURE = "defender-captures-attacker"
    INTERCEPT = "attacker-intercepts-defender"
    TARGET = "attacker-reaches-target"


@dataclass(frozen=True)
class Event:
    t: float
    kind: EventKind
    attacker: int
    defender: Optional[int]
    position: Point2


@dataclass(frozen=True)
class TraceRow:
    t: float
    phase: int
    attackers: Tuple[Point2, ...]
    defenders: Tuple[Point2, ...]
    attacker_controls: Tuple[Point2, ...]
    defender_controls: Tuple[Point2, ...]
    x_b_critical: Optional[Point2]
    x_b_support: Optional[Point2]


@dataclass
class SimTrace:
    """
    Everything a run produced. Times are game time; attacker_clock converts
    to the clock on which an attacker covers unit distance per unit time.
    """
    nu: SpeedRatio
    mode: Mode
    config: SimConfig
    costs: CostMatrix
    assignment: Assignment
    rows: List[TraceRow] = field(default_factory=list)
    events: List[Event] = field(default_factory=list)
    phase1_end: Optional[float] = None
    t_f: Optional[float] = None
    payoff: Optional[float] = None
    winner: Optional[str] = None
    plan: Optional[InterceptPlan] = None
    flags: Dict[str, Any] = field(default_factory=dict)
    phase1_state: Optional[GameState] = None
    final_state: Optional[GameState] = None

    def attacker_clock(self, t: Optional[float]) -> Optional[float]:
        return None if t is None else self.nu.nu * t

    def x_b_track(self) -> np.ndarray:
        """Critical-pair capture points per row, NaN where undefined"""
        return np.array([
            r.x_b_critical.as_tuple() if r.x_b_critical is not None else (np.nan, np.nan)
            for r in self.rows
        ])

    def events_of(self, kind: EventKind) -> List[Event]:
        return [e for e in self.events if e.kind == kind]


# =============================================================================
# CONTROLS AND STEPPING
# =============================================================================

def phase2_pairing(state: GameState, nu: SpeedLike) -> Dict[int, int]:
    """
    Pair the surviving agents for the endgame. A single surviving pair is
    paired directly; larger remnants are re-assigned by LBAP on their costs.
    """
    attackers = state.active_attackers()
    defenders = state.active_defenders()
    if not attackers or not defenders:
        return {}

    n = min(len(attackers), len(defenders))
    attackers, defenders = attackers[:n], defenders[:n]
    if n == 1:
        return {attackers[0]: defenders[0]}

    sub = GameState(
        target=state.target,
        attackers=tuple(state.attackers[i] for i in attackers),
        defenders=tuple(state.defenders[j] for j in defenders),
        clock=state.clock,
    )
    sub_assign = solve_lbap(build_cost_matrix(sub, nu))
    return {attackers[i]: defenders[j] for i, j in enumerate(sub_assign.psi)}


def _intercept_control(position: Point2, plan: InterceptPlan, speed: float, dt: float) -> Point2:
    """Head for x_I; land on it exactly with a sub-unit control on the last step"""
    gap = distance(position, plan.point)
    if gap <= DEGENERACY_TOL:
        return ZERO
    if gap <= speed * dt:
        return (plan.point - position) / (speed * dt)
    return unit_vector(position, plan.point)


def compute_controls(
    state: GameState,
    profile: StrategyProfile,
    assign: Assignment,
    nu: SpeedLike,
    dt: float,
    endgame: Optional[Dict[int, int]] = None
) -> Controls:
    """
    Controls for every agent.

    Phase I (endgame is None): tagged strategies under the frozen assignment.
    Phase II: the endgame pairing plays its equilibrium, unpaired attackers
    head for the target and unpaired defenders hold.
    """
    nu = as_speed_ratio(nu)
    u = [ZERO] * len(state.attackers)
    v = [ZERO] * len(state.defenders)
    pairing = assign.pairing if endgame is None else endgame
    paired_defenders = set()

    for i, a in enumerate(state.attackers):
        if not a.active:
            continue
        strategy = profile.attackers[i] if endgame is None else NOMINAL
        j = pairing.get(i)
        pair_active = j is not None and state.defenders[j].active

        if strategy.tag == StrategyTag.NOMINAL and pair_active:
            u[i], v[j] = pair_controls(a.position, state.defender(j), state.target, nu)
            paired_defenders.add(j)
        elif strategy.tag in (StrategyTag.NOMINAL, StrategyTag.STRAIGHT_TO_TARGET):
            try:
                u[i] = unit_vector(a.position, state.target)
            except DegenerateDirection:
                u[i] = ZERO
        elif strategy.tag == StrategyTag.INTERCEPT:
            u[i] = _intercept_control(a.position, strategy.plan, nu.nu, dt)

    # defenders whose attacker is not playing nominal still chase their pair's x_B
    for j, d in enumerate(state.defenders):
        if not d.active or j in paired_defenders:
            continue
        if profile.defenders[j].tag != StrategyTag.NOMINAL:
            continue
        partners = [i for i, jj in pairing.items() if jj == j and state.attackers[i].active]
        if partners:
            _, v[j] = pair_controls(state.attacker(partners[0]), d.position, state.target, nu)

    return Controls(tuple(u), tuple(v))


def step(
    state: GameState,
    profile: StrategyProfile,
    assign: Assignment,
    nu: SpeedLike,
    dt: float,
    endgame: Optional[Dict[int, int]] = None
) -> Tuple[GameState, Controls]:
    """
    One Euler step: x_A += nu * u * dt, x_D += v * dt. Inactive agents stay put.
    """
    nu = as_speed_ratio(nu)
    controls = compute_controls(state, profile, assign, nu, dt, endgame)
    attackers = [advance(a.position, u, nu.nu, dt) for a, u in zip(state.attackers, controls.attackers)]
    defenders = [advance(d.position, v, 1.0, dt) for d, v in zip(state.defenders, controls.defenders)]
    return state.with_positions(attackers, defenders, state.clock + dt), controls


# =============================================================================
# EVENTS
# =============================================================================

def detect_events(
    state: GameState,
    capture_eps: float,
    profile: Optional[StrategyProfile] = None,
    assign: Optional[Assignment] = None,
    endgame: Optional[Dict[int, int]] = None
) -> List[Event]:
    """
    Terminal and removal events at the current state, in precedence order:
    target arrival, then interception, then capture. An agent takes part in
    at most one event, and any target arrival ends detection.

    Captures count only for assigned pairs in Phase I (assign given, endgame
    None) and for any pair otherwise.
    """
    t = state.clock
    reached = [
        Event(t, EventKind.TARGET, i, None, state.target)
        for i in state.active_attackers()
        if distance(state.attacker(i), state.target) <= capture_eps
    ]
    if reached:
        return reached

    events: List[Event] = []
    used_attackers = set()
    used_defenders = set()

    if profile is not None and endgame is None:
        for i in state.active_attackers():
            strategy = profile.attackers[i]
            if strategy.tag not in (StrategyTag.INTERCEPT, StrategyTag.DWELL):
                continue
            j = strategy.plan.defender
            if j in used_defenders or not state.defenders[j].active:
                continue
            if distance(state.attacker(i), state.defender(j)) <= capture_eps:
                events.append(Event(t, EventKind.INTERCEPT, i, j, state.defender(j)))
                used_attackers.add(i)
                used_defenders.add(j)

    for i in state.active_attackers():
        if i in used_attackers:
            continue
        for j in state.active_defenders():
            if j in used_defenders:
                continue
            if endgame is None and assign is not None and assign.psi[i] != j:
                continue
            if distance(state.attacker(i), state.defender(j)) <= capture_eps:
                events.append(Event(t, EventKind.CAPTURE, i, j, state.attacker(i)))
                used_attackers.add(i)
                used_defenders.add(j)
                break

    return events


def apply_events(state: GameState, events: List[Event]) -> GameState:
    """Remove the agents taking part in each event; arrivals snap onto the target"""
    for e in events:
        if e.kind == EventKind.TARGET:
            state = state.remove_attacker(e.attacker, position=state.target)
        else:
            state = state.remove_attacker(e.attacker)
            state = state.remove_defender(e.defender)
    return state


def compute_payoff(state: GameState) -> float:
    """Smallest distance to the target at which any attacker left play"""
    return min(distance(a.position, state.target) for a in state.attackers)


# =============================================================================
# RUN
# =============================================================================

def _pair_point(state: GameState, i: int, j: int, nu: SpeedRatio) -> Optional[Point2]:
    if not (state.attackers[i].active and state.defenders[j].active):
        return None
    return capture_point(apollonius(state.attacker(i), state.defender(j), nu), state.target).point


def _record(trace: SimTrace, state: GameState, controls: Controls, phase: int, roles):
    trace.rows.append(TraceRow(
        t=state.clock,
        phase=phase,
        attackers=tuple(a.position for a in state.attackers),
        defenders=tuple(d.position for d in state.defenders),
        attacker_controls=controls.attackers,
        defender_controls=controls.defenders,
        x_b_critical=_pair_point(state, roles.critical_attacker, roles.critical_defender, trace.nu),
        x_b_support=_pair_point(state, roles.support_attacker, roles.support_defender, trace.nu),
    ))


def _plan_deviation(
    state: GameState,
    mode: Mode,
    assign: Assignment,
    nu: SpeedRatio,
    config: SimConfig,
    flags: Dict[str, Any]
) -> Optional[InterceptPlan]:
    """Feasibility checks for the requested deviation; None means nominal fallback"""
    flags["win_after_interception_precheck"] = win_after_interception_precheck(state, assign, nu)

    if mode == Mode.ONE_DEVIATION:
        try:
            plan = one_deviation_plan(state, assign, nu)
        except Infeasible as e:
            flags["one_deviation_feasible"] = False
            flags["infeasible_reason"] = str(e)
            return None
        flags["one_deviation_feasible"] = True
        return plan

    try:
        regions = build_feasibility_regions(state, nu, assign)
        result = check_two_deviation_condition(regions, state, nu, assign=assign)
        flags["two_deviation_holds"] = result.holds
        flags["two_deviation_grid"] = result.grid_n
    except DegenerateGeometry as e:
        logger.warning(f"Two-deviation regions unavailable: {e}")
        flags["two_deviation_holds"] = False

    try:
        traj = precompute_defender_trajectory(
            state, nu, step=config.dt, assign=assign,
            capture_eps=config.capture_eps, t_max=config.t_max,
        )
        return two_deviation_plan(traj, state, nu, assign=assign)
    except (Infeasible, NonConvergence) as e:
        flags["infeasible_reason"] = str(e)
        return None


def run(
    state: GameState,
    nu: SpeedLike,
    mode=Mode.NOMINAL,
    config: Optional[SimConfig] = None
) -> SimTrace:
    """
    Simulate a full game from `state`.

    The assignment is solved once at t = 0 and frozen. Deviation modes plan
    the interception at t = 0; when no plan exists the run falls back to
    nominal play and sets flags["fallback"].

    Raises:
        SimulationTimeout: if the game is still open at config.t_max (the
            partial trace is attached)
    """
    nu = as_speed_ratio(nu)
    mode = Mode.parse(mode)
    config = config or SimConfig()

    costs = build_cost_matrix(state, nu)
    assign = solve_lbap(costs)
    roles = critical_roles(assign)
    trace = SimTrace(nu=nu, mode=mode, config=config, costs=costs, assignment=assign)
    trace.flags["defender_win_condition"] = defender_win_condition(costs, assign)
    trace.flags["fallback"] = False
    logger.info(f"Assignment psi={assign.psi_one_based} value={assign.value:.4f} mode={mode.value}")
    if not trace.flags["defender_win_condition"]:
        logger.warning("Target lies inside an assigned pair's circle; nominal play does not guarantee a defender win")

    profile = StrategyProfile.nominal(len(state.attackers), len(state.defenders))
    if mode != Mode.NOMINAL:
        plan = _plan_deviation(state, mode, assign, nu, config, trace.flags)
        if plan is None:
            logger.warning(f"{mode.value} infeasible, falling back to nominal play")
            trace.flags["fallback"] = True
        else:
            trace.plan = plan
            profile = StrategyProfile.for_deviation(assign, plan, critical_straight=(mode == Mode.TWO_DEVIATION))
    profile.validate(state)

    phase = 1
    endgame: Optional[Dict[int, int]] = None
    steps = 0
    target_reached = False

    while True:
        events = detect_events(state, config.capture_eps, profile, assign, endgame)
        if events:
            state = apply_events(state, events)
            trace.events.extend(events)
            for e in events:
                logger.info(f"t={e.t:.4f} {e.kind.value}: A{e.attacker + 1}"
                            + (f" D{e.defender + 1}" if e.defender is not None else ""))
            target_reached = any(e.kind == EventKind.TARGET for e in events)
            if phase == 1:
                trace.phase1_end = state.clock
                trace.phase1_state = state
                phase = 2
                endgame = phase2_pairing(state, nu)
                logger.info(f"Phase II from t={state.clock:.4f} with pairing {endgame}")
            elif endgame is not None:
                endgame = phase2_pairing(state, nu)

        if target_reached or not state.active_attackers():
            break

        if state.clock >= config.t_max:
            _record(trace, state, Controls.zeros(len(state.attackers), len(state.defenders)), phase, roles)
            trace.final_state = state
            raise SimulationTimeout(f"Game still open at t={state.clock:.4f}", trace=trace)

        new_state, controls = step(state, profile, assign, nu, config.dt, endgame)
        if steps % config.record_every == 0:
            _record(trace, state, controls, phase, roles)

        # an interceptor that has landed waits for its defender
        for i, strategy in enumerate(profile.attackers):
            if strategy.tag == StrategyTag.INTERCEPT and state.attackers[i].active \
                    and distance(new_state.attacker(i), strategy.plan.point) <= DEGENERACY_TOL:
                profile = profile.with_attacker(i, AgentStrategy(StrategyTag.DWELL, strategy.plan))
                logger.debug(f"A{i + 1} reached x_I at t={new_state.clock:.4f}, dwelling")

        state = new_state
        steps += 1

    _record(trace, state, Controls.zeros(len(state.attackers), len(state.defenders)), phase, roles)
    trace.final_state = state
    trace.t_f = state.clock
    trace.payoff = compute_payoff(state)
    trace.winner = "attackers" if target_reached else "defenders"
    logger.info(
        f"Game over at t={trace.t_f:.4f}: {trace.winner} win, payoff {trace.payoff:.4f}"
    )
    return trace
