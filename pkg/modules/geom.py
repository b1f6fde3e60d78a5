"""
Planar Geometry Module

Points, circles, segments, half-planes, triangles and annular sectors, plus
the intersection and membership predicates the game constructions rely on.

Boundary convention: open regions (half-planes, annular sectors) are tested
with strict inequalities, closed disks with <=. Predicates that take a `tol`
argument test the closure of the region grown by `tol` instead.
"""

import math
import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

from modules.config import DEGENERACY_TOL
from modules.errors import DegenerateDirection, DegenerateGeometry, NonFiniteValue

logger = logging.getLogger(__name__)


# =============================================================================
# PRIMITIVES
# =============================================================================

@dataclass(frozen=True, slots=True)
class Point2:
    """A point (or vector) in the plane, in game-length units"""
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise NonFiniteValue(f"Point2 components must be finite, got ({self.x}, {self.y})")

    def __add__(self, other: "Point2") -> "Point2":
        return Point2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Point2") -> "Point2":
        return Point2(self.x - other.x, self.y - other.y)

    def __mul__(self, k: float) -> "Point2":
        return Point2(self.x * k, self.y * k)

    __rmul__ = __mul__

    def __truediv__(self, k: float) -> "Point2":
        return Point2(self.x / k, self.y / k)

    def __neg__(self) -> "Point2":
        return Point2(-self.x, -self.y)

    def dot(self, other: "Point2") -> float:
        return self.x * other.x + self.y * other.y

    def cross(self, other: "Point2") -> float:
        """z-component of the 3D cross product"""
        return self.x * other.y - self.y * other.x

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def perp(self) -> "Point2":
        """Counter-clockwise rotation by 90 degrees"""
        return Point2(-self.y, self.x)

    def as_tuple(self) -> Tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True, slots=True)
class Circle:
    center: Point2
    radius: float

    def __post_init__(self):
        if not math.isfinite(self.radius):
            raise NonFiniteValue(f"Circle radius must be finite, got {self.radius}")
        if self.radius < 0:
            raise ValueError(f"Circle radius must be >= 0, got {self.radius}")

    def contains(self, p: Point2, tol: float = 0.0) -> bool:
        """Closed-disk membership"""
        return distance(p, self.center) <= self.radius + tol


@dataclass(frozen=True, slots=True)
class Segment:
    a: Point2
    b: Point2

    def point_at(self, t: float) -> Point2:
        """Point at parameter t, with t=0 at a and t=1 at b"""
        return lerp(self.a, self.b, t)

    def length(self) -> float:
        return distance(self.a, self.b)

    def is_degenerate(self) -> bool:
        return self.length() <= DEGENERACY_TOL


@dataclass(frozen=True, slots=True)
class HalfPlane:
    """Open half-plane of points strictly closer to anchor1 than to anchor2"""
    anchor1: Point2
    anchor2: Point2

    def __post_init__(self):
        if distance(self.anchor1, self.anchor2) <= DEGENERACY_TOL:
            raise DegenerateGeometry("HalfPlane anchors coincide")


@dataclass(frozen=True, slots=True)
class Triangle:
    v1: Point2
    v2: Point2
    v3: Point2

    def vertices(self) -> Tuple[Point2, Point2, Point2]:
        return (self.v1, self.v2, self.v3)

    def signed_area(self) -> float:
        return 0.5 * (self.v2 - self.v1).cross(self.v3 - self.v1)


@dataclass(frozen=True, slots=True)
class AnnularSector:
    """Open annulus around `center`, clipped by a triangle"""
    center: Point2
    rho_inner: float
    rho_outer: float
    clip: Triangle

    def __post_init__(self):
        if not (0.0 <= self.rho_inner <= self.rho_outer):
            raise ValueError(
                f"AnnularSector requires 0 <= rho_inner <= rho_outer, "
                f"got {self.rho_inner}, {self.rho_outer}"
            )

    def is_empty(self) -> bool:
        return self.rho_outer - self.rho_inner <= DEGENERACY_TOL


# =============================================================================
# BASIC OPERATIONS
# =============================================================================

def distance(p: Point2, q: Point2) -> float:
    return math.hypot(p.x - q.x, p.y - q.y)


def lerp(p: Point2, q: Point2, t: float) -> Point2:
    return Point2(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y))


def unit_vector(from_: Point2, to: Point2) -> Point2:
    """
    Unit vector pointing from `from_` toward `to`.

    Raises:
        DegenerateDirection: if the points coincide within the degeneracy tolerance
    """
    dx = to.x - from_.x
    dy = to.y - from_.y
    n = math.hypot(dx, dy)
    if n <= DEGENERACY_TOL:
        raise DegenerateDirection(f"No direction from {from_} to {to}")
    return Point2(dx / n, dy / n)


def advance(p: Point2, control: Point2, speed: float, dt: float) -> Point2:
    """One explicit Euler step of single-integrator kinematics"""
    k = speed * dt
    return Point2(p.x + control.x * k, p.y + control.y * k)


def distance_to_segment(p: Point2, s: Segment) -> float:
    d = s.b - s.a
    dd = d.dot(d)
    if dd <= DEGENERACY_TOL * DEGENERACY_TOL:
        return distance(p, s.a)
    t = min(1.0, max(0.0, (p - s.a).dot(d) / dd))
    return distance(p, s.point_at(t))


# =============================================================================
# INTERSECTIONS
# =============================================================================

def _segment_circle_params(s: Segment, c: Circle) -> Optional[Tuple[float, float]]:
    """
    Parameters (t1 <= t2) where the infinite line through s meets the circle,
    or None when it misses. Assumes s is not degenerate.
    """
    d = s.b - s.a
    f = s.a - c.center
    qa = d.dot(d)
    qb = 2.0 * f.dot(d)
    qc = f.dot(f) - c.radius * c.radius
    disc = qb * qb - 4.0 * qa * qc
    if disc < 0.0:
        return None
    root = math.sqrt(disc)
    return ((-qb - root) / (2.0 * qa), (-qb + root) / (2.0 * qa))


def segment_circle_intersections(s: Segment, c: Circle) -> List[Point2]:
    """
    Points where segment s crosses the boundary of circle c.

    Returns:
        0, 1 or 2 points, ordered by arclength from s.a
    """
    if s.is_degenerate():
        if abs(distance(s.a, c.center) - c.radius) <= DEGENERACY_TOL:
            return [s.a]
        return []

    params = _segment_circle_params(s, c)
    if params is None:
        return []

    # tolerance in parameter space equivalent to DEGENERACY_TOL in length
    t_tol = DEGENERACY_TOL / s.length()
    hits: List[float] = []
    for t in params:
        if -t_tol <= t <= 1.0 + t_tol:
            t = min(1.0, max(0.0, t))
            if not hits or abs(t - hits[-1]) > t_tol:
                hits.append(t)
    return [s.point_at(t) for t in hits]


def segment_disk_interval(s: Segment, c: Circle) -> Optional[Tuple[float, float]]:
    """
    Parameter interval [t0, t1] of segment s lying inside the closed disk c.

    Returns:
        (t0, t1) with 0 <= t0 <= t1 <= 1, or None if the segment misses the disk
    """
    if s.is_degenerate():
        return (0.0, 1.0) if c.contains(s.a) else None

    params = _segment_circle_params(s, c)
    if params is None:
        return None
    t0 = max(0.0, params[0])
    t1 = min(1.0, params[1])
    if t0 > t1:
        return None
    return (t0, t1)


def segment_hits_disks(s: Segment, disks: List[Circle]) -> bool:
    """True iff some point of s lies in every one of the closed disks"""
    lo, hi = 0.0, 1.0
    for disk in disks:
        interval = segment_disk_interval(s, disk)
        if interval is None:
            return False
        lo = max(lo, interval[0])
        hi = min(hi, interval[1])
        if lo > hi:
            return False
    return True


# =============================================================================
# MEMBERSHIP
# =============================================================================

def in_half_plane(p: Point2, h: HalfPlane) -> bool:
    """Strict: points on the bisector belong to neither side"""
    d1 = (p.x - h.anchor1.x) ** 2 + (p.y - h.anchor1.y) ** 2
    d2 = (p.x - h.anchor2.x) ** 2 + (p.y - h.anchor2.y) ** 2
    return d1 < d2


def in_triangle(p: Point2, t: Triangle, tol: float = 0.0) -> bool:
    """
    Closed-triangle membership.

    Collinear (degenerate) triangles are treated as the segment they span.
    With tol > 0 the triangle is grown by tol in every direction.
    """
    verts = t.vertices()
    edges = [(verts[i], verts[(i + 1) % 3]) for i in range(3)]
    longest = max(distance(a, b) for a, b in edges)

    if abs(2.0 * t.signed_area()) <= DEGENERACY_TOL * max(1.0, longest * longest):
        slack = max(tol, DEGENERACY_TOL)
        return any(distance_to_segment(p, Segment(a, b)) <= slack for a, b in edges)

    orientation = 1.0 if t.signed_area() > 0 else -1.0
    for a, b in edges:
        edge = b - a
        signed = orientation * edge.cross(p - a) / edge.norm()
        if signed < -tol:
            return False
    return True


def in_annular_sector(p: Point2, s: AnnularSector, tol: float = 0.0) -> bool:
    """
    Open annular sector membership: rho_inner < |p - center| < rho_outer and p
    inside the clip triangle. With tol > 0 tests the closure grown by tol.
    """
    r = distance(p, s.center)
    if tol > 0.0:
        if not (s.rho_inner - tol <= r <= s.rho_outer + tol):
            return False
    elif not (s.rho_inner < r < s.rho_outer):
        return False
    return in_triangle(p, s.clip, tol)
