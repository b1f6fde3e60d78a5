"""
Geometry primitives and predicates.
"""

import math

import numpy as np
import pytest

from modules.errors import DegenerateDirection, DegenerateGeometry, NonFiniteValue
from modules.geom import (
    AnnularSector,
    Circle,
    HalfPlane,
    Point2,
    Segment,
    Triangle,
    distance,
    distance_to_segment,
    in_annular_sector,
    in_half_plane,
    in_triangle,
    segment_circle_intersections,
    segment_disk_interval,
    segment_hits_disks,
    unit_vector,
)


# =============================================================================
# PRIMITIVES
# =============================================================================

def test_point_rejects_non_finite():
    with pytest.raises(NonFiniteValue):
        Point2(float("nan"), 0.0)
    with pytest.raises(NonFiniteValue):
        Point2(0.0, float("inf"))


def test_point_arithmetic():
    p = Point2(1.0, 2.0)
    q = Point2(3.0, -1.0)
    assert p + q == Point2(4.0, 1.0)
    assert q - p == Point2(2.0, -3.0)
    assert 2 * p == Point2(2.0, 4.0)
    assert p.dot(q) == pytest.approx(1.0)
    assert p.cross(q) == pytest.approx(-7.0)
    assert Point2(1.0, 0.0).perp() == Point2(-0.0, 1.0)


def test_half_plane_rejects_coincident_anchors():
    with pytest.raises(DegenerateGeometry):
        HalfPlane(Point2(1.0, 1.0), Point2(1.0, 1.0))


# =============================================================================
# UNIT VECTOR
# =============================================================================

def test_unit_vector_axis_aligned():
    assert unit_vector(Point2(0, 0), Point2(3, 0)) == Point2(1.0, 0.0)


def test_unit_vector_diagonal():
    u = unit_vector(Point2(1, 1), Point2(2, 2))
    assert u.x == pytest.approx(math.sqrt(2) / 2)
    assert u.y == pytest.approx(math.sqrt(2) / 2)


def test_unit_vector_coincident_points():
    with pytest.raises(DegenerateDirection):
        unit_vector(Point2(0, 0), Point2(0, 0))


def test_unit_vector_norm_random():
    rng = np.random.default_rng(11)
    for a, b in rng.uniform(-10, 10, size=(1000, 2, 2)):
        u = unit_vector(Point2(*a), Point2(*b))
        assert abs(u.norm() - 1.0) <= 1e-12


# =============================================================================
# SEGMENT / CIRCLE
# =============================================================================

def test_segment_circle_symmetric_chord():
    hits = segment_circle_intersections(Segment(Point2(-2, 0), Point2(2, 0)), Circle(Point2(0, 0), 1.0))
    assert len(hits) == 2
    assert hits[0].x == pytest.approx(-1.0) and hits[0].y == pytest.approx(0.0)
    assert hits[1].x == pytest.approx(1.0) and hits[1].y == pytest.approx(0.0)


def test_segment_circle_disjoint():
    assert segment_circle_intersections(Segment(Point2(0, 2), Point2(0, 3)), Circle(Point2(0, 0), 1.0)) == []


def test_segment_circle_endpoint_inside():
    hits = segment_circle_intersections(Segment(Point2(0, 0), Point2(2, 0)), Circle(Point2(0, 0), 1.0))
    assert len(hits) == 1
    assert hits[0].x == pytest.approx(1.0)


def test_segment_circle_ordered_from_start():
    hits = segment_circle_intersections(Segment(Point2(2, 0), Point2(-2, 0)), Circle(Point2(0, 0), 1.0))
    assert hits[0].x == pytest.approx(1.0)
    assert hits[1].x == pytest.approx(-1.0)


def test_segment_circle_random_against_sampling():
    """Residuals and crossing counts on random segments, away from tangency"""
    rng = np.random.default_rng(3)
    checked = 0
    for _ in range(10000):
        a = Point2(*rng.uniform(-3, 3, 2))
        b = Point2(*rng.uniform(-3, 3, 2))
        c = Circle(Point2(*rng.uniform(-2, 2, 2)), float(rng.uniform(0.1, 2.0)))
        s = Segment(a, b)
        if s.length() < 0.1:
            continue

        d = b - a
        line_dist = abs(d.cross(c.center - a)) / d.norm()
        if abs(line_dist - c.radius) < 1e-3:
            continue
        if abs(distance(a, c.center) - c.radius) < 1e-3 or abs(distance(b, c.center) - c.radius) < 1e-3:
            continue

        hits = segment_circle_intersections(s, c)
        for p in hits:
            assert abs(distance(p, c.center) - c.radius) <= 1e-9
            assert distance_to_segment(p, s) <= 1e-9

        ts = np.linspace(0.0, 1.0, 4001)
        xs = a.x + ts * d.x
        ys = a.y + ts * d.y
        f = np.hypot(xs - c.center.x, ys - c.center.y) - c.radius
        sign_changes = int(np.count_nonzero(np.sign(f[:-1]) != np.sign(f[1:])))
        assert len(hits) == sign_changes
        checked += 1

    assert checked > 5000


def test_segment_disk_interval_and_hits():
    s = Segment(Point2(-2, 0), Point2(2, 0))
    t0, t1 = segment_disk_interval(s, Circle(Point2(0, 0), 1.0))
    assert t0 == pytest.approx(0.25)
    assert t1 == pytest.approx(0.75)

    overlapping = [Circle(Point2(-0.5, 0), 1.0), Circle(Point2(0.5, 0), 1.0)]
    apart = [Circle(Point2(-1.5, 0), 0.4), Circle(Point2(1.5, 0), 0.4)]
    assert segment_hits_disks(s, overlapping)
    assert not segment_hits_disks(s, apart)


# =============================================================================
# MEMBERSHIP
# =============================================================================

def test_in_half_plane_examples():
    h = HalfPlane(Point2(-1, 0), Point2(1, 0))
    assert in_half_plane(Point2(-1, 0), h)
    assert not in_half_plane(Point2(0, 0), h)


def test_in_half_plane_worked_interception_point():
    h = HalfPlane(Point2(-1.5, 0.7), Point2(-1.7, 0.3))
    assert in_half_plane(Point2(-1.2362, 0.5877), h)


def test_in_half_plane_antisymmetric():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        a1, a2, p = (Point2(*v) for v in rng.uniform(-2, 2, size=(3, 2)))
        if distance(a1, a2) < 1e-6:
            continue
        forward = in_half_plane(p, HalfPlane(a1, a2))
        backward = in_half_plane(p, HalfPlane(a2, a1))
        if abs(distance(p, a1) - distance(p, a2)) > 1e-12:
            assert forward != backward


def test_in_triangle_closed_and_degenerate():
    t = Triangle(Point2(0, 0), Point2(1, 0), Point2(0, 1))
    assert in_triangle(Point2(0.2, 0.2), t)
    assert in_triangle(Point2(0.5, 0.0), t)
    assert not in_triangle(Point2(0.6, 0.6), t)

    flat = Triangle(Point2(0, 0), Point2(1, 0), Point2(2, 0))
    assert in_triangle(Point2(1.5, 0.0), flat)
    assert not in_triangle(Point2(1.5, 0.1), flat)


def _sector():
    return AnnularSector(
        center=Point2(0, 0),
        rho_inner=0.5,
        rho_outer=1.5,
        clip=Triangle(Point2(0, 0), Point2(3, -1), Point2(3, 2)),
    )


def test_in_annular_sector_examples():
    s = _sector()
    assert not in_annular_sector(Point2(0, 0), s)
    assert not in_annular_sector(Point2(2.0, 0.0), s)
    assert in_annular_sector(Point2(1.0, 0.1), s)
    assert not in_annular_sector(Point2(0.5, 0.0), s)
    assert in_annular_sector(Point2(0.5, 0.0), s, tol=1e-9)


def test_in_annular_sector_random_against_oracle():
    """Polar radius plus barycentric coordinates as an independent oracle"""
    s = _sector()
    v1, v2, v3 = (np.array(v.as_tuple()) for v in s.clip.vertices())
    basis = np.column_stack([v2 - v1, v3 - v1])

    rng = np.random.default_rng(9)
    inside = 0
    for p in rng.uniform(-1, 2, size=(5000, 2)):
        r = float(np.hypot(*p))
        lam = np.linalg.solve(basis, p - v1)
        if min(abs(r - 0.5), abs(r - 1.5)) < 1e-9 or np.min(np.abs(np.r_[lam, 1 - lam.sum()])) < 1e-9:
            continue
        expected = 0.5 < r < 1.5 and lam[0] >= 0 and lam[1] >= 0 and lam.sum() <= 1
        assert in_annular_sector(Point2(*p), s) == expected
        inside += expected

    assert inside > 100
