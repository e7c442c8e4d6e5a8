import math
from types import SimpleNamespace

import numpy as np
import pytest

from conftest import make
from isoflats.complex_core import AtVertex, PLPath
from isoflats.diagrams import RuffleParams
from isoflats.diagrams.model import whole_complex
from isoflats.errors import BadParams, PreconditionRuffleFailed
from isoflats.experiments import random_point, ruffled_family
from isoflats.flats import flat_from_cells
from isoflats.geodesics import geodesic_between, geodesic_through
from isoflats.rel_hyp import (
    QGParams,
    broom_bound,
    check_quasigeodesic,
    divergence_check,
    extract_broom,
    fellow_travel_certificate,
    hausdorff_distance,
    is_piecewise_geodesic,
    quadratic_bound,
    relative_thinness,
    tame_quasigeodesic,
    tamed_params,
    thinness,
    validate_certificate,
)

H = 0.05


def vpath(X, names):
    return geodesic_through(X, [AtVertex(v) for v in names])


def test_quadratic_bound_values():
    # k = floor(10 / 2) = 5 gives R theta k (k-1) / 2 = 10 pi
    assert quadratic_bound(10, 1, math.pi) == pytest.approx(10 * math.pi)
    assert quadratic_bound(1.9, 1, math.pi) == 0.0
    assert quadratic_bound(3.9, 1, 1.0) == 0.0  # k = 1


def test_broom_bound_value():
    assert broom_bound(10, 2, math.pi / 2) == pytest.approx(2 * math.pi)


def test_qg_params_validated():
    with pytest.raises(BadParams):
        QGParams(0.5, 0)
    with pytest.raises(BadParams):
        QGParams(1, -1)
    assert tamed_params(QGParams(2, 1)) == QGParams(2, 2.5)


def test_hausdorff_of_parallel_segments():
    X = make("grid", n=4)
    m = hausdorff_distance(X, vpath(X, ["v0_0", "v4_0"]), vpath(X, ["v0_1", "v4_1"]), H)
    assert 1.0 - 1e-9 <= m.value <= 1.0 + m.uncertainty


def test_thinness_of_flat_right_triangle():
    # legs of length 4: the hypotenuse midpoint is 2 from both legs, and
    # leg points are never farther than 4/(1+sqrt 2) from the other sides
    X = make("grid", n=4)
    sides = [vpath(X, ["v0_0", "v4_0"]), vpath(X, ["v4_0", "v0_4"]), vpath(X, ["v0_4", "v0_0"])]
    m = thinness(X, sides, H)
    assert 2.0 - 1e-9 <= m.value <= 2.0 + m.uncertainty
    assert m.detail["side"] == 1


def test_relative_thinness_with_flat_is_smaller():
    X = make("grid", n=4)
    sides = [vpath(X, ["v0_0", "v4_0"]), vpath(X, ["v4_0", "v0_4"]), vpath(X, ["v0_4", "v0_0"])]
    F = flat_from_cells(X, [c.id for c in X.cells], "all")
    assert relative_thinness(X, sides, F, H).value == pytest.approx(0.0, abs=1e-9)
    with pytest.raises(BadParams):
        thinness(X, sides[:2], H)


def test_geodesic_is_1_0_quasigeodesic():
    X = make("grid", n=4)
    assert check_quasigeodesic(X, vpath(X, ["v0_0", "v4_3"]), QGParams(1.0, 0.0))


def test_u_turn_fails_lower_inequality():
    X = make("grid", n=4)
    P = PLPath(X, [AtVertex("v0_0"), AtVertex("v0_1"), AtVertex("v0_2"), AtVertex("v0_3"), AtVertex("v1_3"),
                   AtVertex("v1_2"), AtVertex("v1_1"), AtVertex("v1_0")])
    v = check_quasigeodesic(X, P, QGParams(1.0, 0.5))
    assert not v and v.which == "lower"
    assert check_quasigeodesic(X, P, QGParams(1.0, 6.5))


def test_taming_is_piecewise_geodesic_with_tamed_constants():
    X = make("cone", k=5, n=2)
    rng = np.random.default_rng(0)
    P = geodesic_through(X, [random_point(X, rng) for _ in range(4)])
    T = tame_quasigeodesic(X, P, QGParams(2.0, 2.0))
    assert is_piecewise_geodesic(X, T)
    assert T.samples[0] == 0 and T.samples[-1] == pytest.approx(P.length)
    assert all(b - a <= 1 + 1e-12 for a, b in zip(T.samples, T.samples[1:]))


def test_fellow_travel_without_flats():
    X = make("grid", n=4)
    a = vpath(X, ["v0_0", "v4_0"])
    b = vpath(X, ["v0_0", "v0_1", "v4_1", "v4_0"])
    cert = fellow_travel_certificate(X, a, b, [], 1.0)
    assert cert is not None and cert.n == 0
    assert validate_certificate(X, a, b, [], cert)
    assert fellow_travel_certificate(X, a, b, [], 0.5) is None


def test_fellow_travel_through_a_flat():
    X = make("grid", n=6)
    a = vpath(X, ["v0_0", "v6_0"])
    b = vpath(X, ["v0_0", "v1_3", "v5_3", "v6_0"])
    F = flat_from_cells(X, [c.id for c in X.cells], "all")
    assert fellow_travel_certificate(X, a, b, [], 0.5) is None
    cert = fellow_travel_certificate(X, a, b, [F], 0.5)
    assert cert is not None and cert.flats == ["all"]
    assert validate_certificate(X, a, b, [F], cert)


def test_fellow_travel_needs_common_endpoints():
    X = make("grid", n=3)
    with pytest.raises(BadParams):
        fellow_travel_certificate(X, vpath(X, ["v0_0", "v3_0"]), vpath(X, ["v0_0", "v3_1"]), [], 1.0)


def test_broom_in_the_plane():
    X = make("grid", n=4)
    B = extract_broom(X, AtVertex("v0_0"), AtVertex("v4_0"), AtVertex("v0_4"))
    assert B.height == pytest.approx(4.0)
    assert B.handle == pytest.approx(0.0, abs=1e-8)  # bisection resolution
    assert B.theta == pytest.approx(math.pi / 2, abs=1e-6)
    assert B.outer_length == pytest.approx(4 * math.sqrt(2))
    assert B.margin > 0


def test_brooms_on_cone_respect_bound():
    X = make("cone", k=5, n=3)
    rng = np.random.default_rng(21)
    for _ in range(5):
        tip, x, y = (random_point(X, rng) for _ in range(3))
        assert extract_broom(X, tip, x, y).margin >= -1e-6


def test_divergence_on_ruffled_family():
    for name, D, gv in ruffled_family(2):
        rep = divergence_check(D, gv, RuffleParams(3.0, math.pi / 2))
        assert rep.ok, name
    # the wedge strip reaches past 2R, so its bound is not vacuous
    assert max(b for *_, b, _ in rep.samples) > 0


def test_divergence_requires_ruffling():
    X = make("grid", n=6)
    D = whole_complex(X)
    with pytest.raises(PreconditionRuffleFailed):
        divergence_check(D, (0, 6), RuffleParams(0.5, math.pi / 2))
