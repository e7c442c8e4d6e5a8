import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make
from isoflats.complex_core import AtVertex, InCell, OnEdge, PLPath
from isoflats.errors import DegenerateInput, NotNPC
from isoflats.experiments import random_point
from isoflats.geodesics import (
    ComparisonTriangle,
    alexandrov_angle,
    comparison_probe,
    distance,
    geodesic_between,
    geodesic_through,
    is_local_geodesic,
)
from isoflats.mesh import mesh_distance


def sheet_coords(p: InCell):
    i = int(p.c.split("_")[0][1:])
    return i, p.x, p.y


def triplane_oracle(p, q):
    """Unfold two sheets into one plane across the spine."""
    i, x1, y1 = sheet_coords(p)
    j, x2, y2 = sheet_coords(q)
    if i == j:
        return math.hypot(x1 - x2, y1 - y2)
    return math.hypot(x1 - x2, y1 + y2)


coord = st.floats(0.01, 0.99)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 3), st.integers(0, 3), coord, coord, st.integers(0, 3), st.integers(0, 3), coord, coord)
def test_grid_distance_is_euclidean(a, b, fx, fy, c, d, gx, gy):
    X = make("grid", n=4)
    p = InCell(f"c{a}_{b}", a + fx, b + fy)
    q = InCell(f"c{c}_{d}", c + gx, d + gy)
    P, L = geodesic_between(X, p, q)
    assert abs(L - math.hypot(p.x - q.x, p.y - q.y)) < 1e-9
    assert is_local_geodesic(X, P)


def test_triplane_distances_match_unfolding():
    X = make("triplane", R=2)
    rng = np.random.default_rng(7)
    for _ in range(60):
        p, q = random_point(X, rng), random_point(X, rng)
        P, L = geodesic_between(X, p, q)
        assert abs(L - triplane_oracle(p, q)) < 1e-9
        assert abs(P.length - L) < 1e-12


def test_geodesic_crosses_spine_in_a_straight_line():
    X = make("triplane", R=2)
    p = InCell("q1_0_1", 0.5, 1.5)
    q = InCell("q2_0_0", 0.5, 0.5)
    P, L = geodesic_between(X, p, q)
    assert L == pytest.approx(2.0)
    # break at the spine is a straight angle
    assert is_local_geodesic(X, P)


def test_cone5_agrees_with_fine_mesh():
    X = make("cone", k=5, n=2)
    rng = np.random.default_rng(3)
    for _ in range(15):
        p, q = random_point(X, rng), random_point(X, rng)
        L = distance(X, p, q)
        m = mesh_distance(X, p, q, 0.01)
        # mesh distances are upper bounds within about one spacing
        assert -1e-9 <= m - L <= 0.02


def test_distance_symmetric_and_zero():
    X = make("hex", n=2)
    rng = np.random.default_rng(1)
    p, q = random_point(X, rng), random_point(X, rng)
    assert distance(X, p, q) == pytest.approx(distance(X, q, p), abs=1e-12)
    assert distance(X, p, p) == 0.0


def test_triangle_inequality_cone():
    X = make("cone", k=5, n=2)
    rng = np.random.default_rng(11)
    for _ in range(10):
        a, b, c = (random_point(X, rng) for _ in range(3))
        assert distance(X, a, c) <= distance(X, a, b) + distance(X, b, c) + 1e-9


def test_not_npc_raises():
    X = make("cone", k=3, n=2)
    with pytest.raises(NotNPC):
        geodesic_between(X, AtVertex("v0"), InCell(X.cells[0].id, *X.cells[0].coords.mean(0)))


def test_bent_path_is_not_local_geodesic():
    X = make("grid", n=2)
    P = PLPath(X, [AtVertex("v0_0"), AtVertex("v1_0"), AtVertex("v1_1")])
    v = is_local_geodesic(X, P)
    assert not v and v.index == 1
    assert v.link_distance == pytest.approx(math.pi / 2)


def test_cone_apex_path_is_local_geodesic_when_angles_large():
    # at a cone(5) apex, total angle 5pi/2; opposite corners are 5pi/4 apart
    X = make("cone", k=5, n=1)
    apex = AtVertex("v0")
    cells = [c for c in X.cells if "v0" in c.corners]
    p = InCell(cells[0].id, *cells[0].coords.mean(0))
    far = next(c for c in cells[1:] if len(set(c.corners) & set(cells[0].corners)) == 1)
    q = InCell(far.id, *far.coords.mean(0))
    P = geodesic_through(X, [p, apex, q])
    assert is_local_geodesic(X, P)
    assert distance(X, p, q) == pytest.approx(P.length, abs=1e-9)


def test_geodesic_through_concatenates():
    X = make("grid", n=3)
    pts = [AtVertex("v0_0"), AtVertex("v2_0"), AtVertex("v2_2")]
    P = geodesic_through(X, pts)
    assert P.length == pytest.approx(4.0)


def test_comparison_triangle_lengths():
    T = ComparisonTriangle.from_lengths(3.0, 4.0, 5.0)
    assert np.hypot(*(T.q - T.p)) == pytest.approx(3.0)
    assert np.hypot(*(T.r - T.q)) == pytest.approx(4.0)
    assert np.hypot(*(T.p - T.r)) == pytest.approx(5.0)
    assert sum(T.angles) == pytest.approx(math.pi)
    with pytest.raises(DegenerateInput):
        ComparisonTriangle.from_lengths(1.0, 1.0, 5.0)


def test_alexandrov_angle_grid_and_spine():
    X = make("grid", n=3)
    a = alexandrov_angle(X, AtVertex("v1_1"), AtVertex("v2_1"), AtVertex("v1_2"))
    assert a == pytest.approx(math.pi / 2, abs=1e-6)
    T = make("triplane", R=2)
    # directions into two different sheets, both perpendicular to the spine
    b = alexandrov_angle(T, AtVertex("s0"), AtVertex("t1_0_1"), AtVertex("t2_0_1"))
    assert b == pytest.approx(math.pi, abs=1e-6)


def test_probe_flat_triangle_has_no_violation():
    X = make("grid", n=3)
    tri = (InCell("c0_0", 0.5, 0.5), InCell("c2_0", 2.5, 0.2), InCell("c1_2", 1.2, 2.7))
    r = comparison_probe(X, tri, n=8)
    assert r.exact
    assert r.cat0_violation <= 1e-9
    assert r.samples > 0


def test_probe_positive_curvature_detected():
    X = make("cone", k=3, n=1)
    tri = tuple(InCell(X.cells[i].id, *X.cells[i].coords.mean(0)) for i in range(3))
    r = comparison_probe(X, tri, n=8)
    assert not r.exact
    assert r.cat0_violation > 0.01
