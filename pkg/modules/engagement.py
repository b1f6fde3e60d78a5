"""
One-vs-One Engagement Module

Apollonius circle of an attacker-defender pair, the optimal capture point x_B
(closest point of the circle's disk to the target), the saddle-point feedback
strategies that aim both players at x_B, the pair cost phi_ij, and the
analytic time derivative of x_B.

Kinematics: the attacker moves at speed nu < 1, the defender at speed 1.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from modules.config import DEGENERACY_TOL
from modules.errors import CoincidentAgents, InvalidSpeedRatio, TargetInsideCircle
from modules.geom import Circle, Point2, distance, unit_vector

logger = logging.getLogger(__name__)


# =============================================================================
# TYPES
# =============================================================================

@dataclass(frozen=True)
class SpeedRatio:
    """Attacker-to-defender speed ratio, strictly between 0 and 1"""
    nu: float

    def __post_init__(self):
        if not (0.0 < self.nu < 1.0):
            raise InvalidSpeedRatio(f"nu must satisfy 0 < nu < 1, got {self.nu}")

    @property
    def alpha(self) -> float:
        return 1.0 / (1.0 - self.nu ** 2)

    @property
    def beta(self) -> float:
        return self.nu ** 2 / (1.0 - self.nu ** 2)

    @property
    def gamma(self) -> float:
        return self.nu / (1.0 - self.nu ** 2)

    @classmethod
    def parse(cls, value: Union["SpeedRatio", float, int, str]) -> "SpeedRatio":
        """
        Accept a SpeedRatio, a number, or a string such as "2/3" or "0.5".

        Raises:
            InvalidSpeedRatio: if the value is not a number in (0, 1)
        """
        if isinstance(value, SpeedRatio):
            return value
        if isinstance(value, bool):
            raise InvalidSpeedRatio(f"nu must be a number, got {value!r}")
        if isinstance(value, str):
            try:
                value = float(Fraction(value.strip()))
            except (ValueError, ZeroDivisionError):
                raise InvalidSpeedRatio(f"nu must be a number or fraction, got {value!r}")
        if not isinstance(value, (int, float)):
            raise InvalidSpeedRatio(f"nu must be a number, got {type(value).__name__}")
        return cls(float(value))


SpeedLike = Union[SpeedRatio, float]


def as_speed_ratio(nu: SpeedLike) -> SpeedRatio:
    return nu if isinstance(nu, SpeedRatio) else SpeedRatio.parse(nu)


@dataclass(frozen=True)
class ApolloniusCircle:
    """
    Boundary between the points the attacker reaches first and the points the
    defender reaches first. The attacker's side is the closed disk.
    """
    center: Point2
    radius: float
    attacker: Point2
    defender: Point2
    nu: SpeedRatio

    @property
    def circle(self) -> Circle:
        return Circle(self.center, self.radius)

    def contains(self, p: Point2, tol: float = 0.0) -> bool:
        return distance(p, self.center) <= self.radius + tol


@dataclass(frozen=True)
class CapturePoint:
    point: Point2
    distance_to_target: float
    target_inside: bool


# =============================================================================
# CONSTRUCTIONS
# =============================================================================

def apollonius(attacker: Point2, defender: Point2, nu: SpeedLike) -> ApolloniusCircle:
    """
    Apollonius circle of an attacker-defender pair.

    center = alpha * x_A - beta * x_D, radius = gamma * |x_A - x_D|

    Raises:
        CoincidentAgents: if attacker and defender coincide
    """
    nu = as_speed_ratio(nu)
    sep = distance(attacker, defender)
    if sep <= DEGENERACY_TOL:
        raise CoincidentAgents(f"Attacker and defender coincide at {attacker}")

    center = Point2(
        nu.alpha * attacker.x - nu.beta * defender.x,
        nu.alpha * attacker.y - nu.beta * defender.y,
    )
    return ApolloniusCircle(center, nu.gamma * sep, attacker, defender, nu)


def capture_point(ac: ApolloniusCircle, target: Point2) -> CapturePoint:
    """
    Point of the circle's disk closest to the target.

    When the target is inside the disk the attacker can reach it first; the
    capture point is then the target itself and the cost is 0.
    """
    d = distance(target, ac.center)
    if d <= ac.radius:
        return CapturePoint(point=target, distance_to_target=0.0, target_inside=True)

    k = ac.radius / d
    point = Point2(
        ac.center.x + k * (target.x - ac.center.x),
        ac.center.y + k * (target.y - ac.center.y),
    )
    return CapturePoint(point=point, distance_to_target=d - ac.radius, target_inside=False)


def pair_cost(attacker: Point2, defender: Point2, target: Point2, nu: SpeedLike) -> float:
    """phi_ij: equilibrium miss distance of the 1v1 game"""
    return capture_point(apollonius(attacker, defender, nu), target).distance_to_target


# =============================================================================
# EQUILIBRIUM STRATEGIES
# =============================================================================

def strategy_1v1_attacker(attacker: Point2, defender: Point2, target: Point2, nu: SpeedLike) -> Point2:
    """
    Attacker's saddle-point control: unit vector toward the current x_B.

    Raises:
        DegenerateDirection: if the attacker already sits on x_B
    """
    cp = capture_point(apollonius(attacker, defender, nu), target)
    return unit_vector(attacker, cp.point)


def strategy_1v1_defender(attacker: Point2, defender: Point2, target: Point2, nu: SpeedLike) -> Point2:
    """
    Defender's saddle-point control: unit vector toward the current x_B.

    Raises:
        DegenerateDirection: if the defender already sits on x_B
    """
    cp = capture_point(apollonius(attacker, defender, nu), target)
    return unit_vector(defender, cp.point)


def capture_point_velocity(
    attacker: Point2,
    defender: Point2,
    target: Point2,
    attacker_vel: Point2,
    defender_vel: Point2,
    nu: SpeedLike
) -> Point2:
    """
    Time derivative of x_B for given agent velocities.

    With a = x_A - x_D and b = x_T - x_C, x_B = x_C + rho * b/|b|, so

        d/dt x_B = d/dt x_C + rho_dot * b/|b| + rho * (b_dot - b_hat (b_hat . b_dot)) / |b|

    where rho_dot = gamma (a . a_dot)/|a| and b_dot = -d/dt x_C.

    Args:
        attacker_vel: attacker velocity (nu * control), not the unit control
        defender_vel: defender velocity

    Raises:
        TargetInsideCircle: if the target is not strictly outside the circle
        CoincidentAgents: if attacker and defender coincide
    """
    nu = as_speed_ratio(nu)
    ac = apollonius(attacker, defender, nu)

    b = target - ac.center
    b_norm = b.norm()
    if b_norm <= ac.radius:
        raise TargetInsideCircle("x_B is undefined on the boundary when the target is inside")

    a = attacker - defender
    a_dot = attacker_vel - defender_vel
    c_dot = attacker_vel * nu.alpha - defender_vel * nu.beta
    b_dot = -c_dot

    rho_dot = nu.gamma * a.dot(a_dot) / a.norm()
    b_hat = b / b_norm
    b_hat_dot = (b_dot - b_hat * b_hat.dot(b_dot)) / b_norm

    return c_dot + b_hat * rho_dot + b_hat_dot * ac.radius
