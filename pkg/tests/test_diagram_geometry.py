import math
from types import SimpleNamespace

import pytest

from conftest import make
from isoflats.complex_core import AtVertex
from isoflats.diagrams import (
    RuffleParams,
    diagram_convex_hull,
    extract_preflats,
    flat_closure,
    is_ruffled,
)
from isoflats.diagrams.model import from_subcomplex, whole_complex
from isoflats.errors import ArcNotOnBoundary, BadParams, NotNPC
from isoflats.flats import meta_flats


def test_ruffle_params_positive():
    with pytest.raises(BadParams):
        RuffleParams(0, 1)


def test_flat_square_whole_cycle_not_ruffled():
    # no negative curvature and no other boundary: the first sample is a witness
    D = whole_complex(make("grid", n=4))
    v = is_ruffled(D, (0, len(D.outer)), RuffleParams(0.5, 0.5))
    assert not v
    assert v.s == 0.0
    assert v.to_json()["status"] == "no"


def test_short_arc_ruffled_by_rest_of_boundary():
    D = whole_complex(make("grid", n=4))
    assert is_ruffled(D, (0, 4), RuffleParams(5.0, 0.5))


def test_arc_not_on_boundary():
    D = whole_complex(make("grid", n=2))
    with pytest.raises(ArcNotOnBoundary):
        is_ruffled(D, ["v0_0", "v1_1"], RuffleParams(1.0, 1.0))


def test_cone_apex_ruffles_nearby_arc():
    X = make("cone", k=5, n=2)
    D = whole_complex(X)
    # whole-cycle form: only curvature counts, and the apex (-pi/2) is within reach
    assert is_ruffled(D, (0, len(D.outer)), RuffleParams(10.0, math.pi / 2), beta_counts=False)
    assert not is_ruffled(D, (0, len(D.outer)), RuffleParams(1.0, math.pi / 2), beta_counts=False)


def test_preflat_of_whole_grid():
    X = make("grid", n=4)
    D = whole_complex(X)
    (P,) = extract_preflats(D, meta_flats(X)[0])
    assert len(P.cells) == 16 and P.convex
    assert len(P.boundary_edges) == 16


def test_l_shaped_preflat_is_not_convex():
    X = make("grid", n=2)
    D = whole_complex(X)
    F = SimpleNamespace(cells={X.cidx[c] for c in ("c0_0", "c1_0", "c0_1")}, name="L")
    (P,) = extract_preflats(D, F)
    assert len(P.cells) == 3
    assert P.min_exterior_angle == pytest.approx(math.pi / 2)
    assert not P.convex


def test_preflats_split_into_components():
    X = make("grid", n=3)
    D = whole_complex(X)
    F = SimpleNamespace(cells={X.cidx["c0_0"], X.cidx["c2_2"]}, name="two")
    assert len(extract_preflats(D, F)) == 2


def test_hull_of_row_is_the_row():
    X = make("grid", n=4)
    D = whole_complex(X)
    H = diagram_convex_hull(D, ["c0_0", "c3_0"])
    assert H.cells == ["c0_0", "c1_0", "c2_0", "c3_0"]
    assert H.convex


def test_hull_of_diagonal_pair_fills_block():
    # the planar convex hull of two diagonal unit squares meets all four cells
    D = whole_complex(make("grid", n=2))
    H = diagram_convex_hull(D, ["c1_0", "c0_1"])
    assert H.cells == ["c0_0", "c0_1", "c1_0", "c1_1"]


def test_hull_of_points():
    D = whole_complex(make("grid", n=3))
    H = diagram_convex_hull(D, [AtVertex("v0_0"), AtVertex("v3_0")])
    assert H.cells == ["c0_0", "c1_0", "c2_0"]


def test_hull_rejects_positive_curvature():
    X = make("cone", k=3, n=1)
    D = whole_complex(X)
    with pytest.raises(NotNPC):
        diagram_convex_hull(D, [D.cells[0].id])


def test_flat_closure_without_flats_is_identity():
    X = make("grid", n=3)
    D = whole_complex(X)
    C = flat_closure(D, (0, 3), 1.0, [])
    assert C.D_gamma == [] and C.preflats == []
    assert C.beta.length == pytest.approx(3.0)


def test_flat_closure_removes_nearby_preflat():
    X = make("grid", n=4)
    D = whole_complex(X)
    F = SimpleNamespace(cells={X.cidx[c] for c in ("c1_1", "c2_1")}, name="f")
    C = flat_closure(D, (0, 4), 1.5, [F])
    assert {"c1_1", "c2_1"} <= set(C.D_gamma)
    # beta runs from gamma's start to its end around the hull
    assert C.beta.length >= 4.0 - 1e-9
