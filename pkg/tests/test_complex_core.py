import json
import math

import numpy as np
import pytest

from conftest import make, unit_square_doc
from isoflats.complex_core import (
    AtVertex,
    InCell,
    OnEdge,
    PLPath,
    direction_space_at,
    load_complex,
    location_to_str,
    parse_location,
    same_point,
    serialize,
    vertex_link,
)
from isoflats.errors import ConvexityError, MetricError, SchemaError, UnknownVertex
from isoflats.link_analysis import shortest_essential_loop


def test_unit_square_loads():
    X = load_complex(unit_square_doc())
    assert (len(X.cells), len(X.edges), len(X.vertices)) == (1, 4, 4)


def test_declared_length_must_match_coords():
    with pytest.raises(MetricError):
        load_complex(unit_square_doc(length=2.0))


def test_nonconvex_cell_rejected():
    doc = {
        "vertices": list("abcd"),
        "edges": [{"id": x + y, "v0": x, "v1": y, "length": L} for x, y, L in
                  (("a", "b", 2.0), ("b", "c", math.hypot(1, 0.5)), ("c", "d", math.hypot(1, 1.5)), ("d", "a", 2.0))],
        "cells": [{"id": "k", "corners": list("abcd"), "coords": [[0, 0], [2, 0], [1, 0.5], [0, 2]],
                   "sides": ["ab", "bc", "cd", "da"]}],
    }
    with pytest.raises(ConvexityError):
        load_complex(doc)


@pytest.mark.parametrize("doc", [
    "not json at all {",
    {"vertices": ["a"], "edges": []},
    {"vertices": ["a", "a"], "edges": [], "cells": []},
])
def test_schema_errors(doc):
    with pytest.raises(SchemaError):
        load_complex(doc)


def test_grid_counts_by_enumeration():
    # 3x3 block: (n+1)^2 vertices, 2n(n+1) edges, n^2 cells
    X = make("grid", n=3)
    assert (len(X.vertices), len(X.edges), len(X.cells)) == (16, 24, 9)


def test_serialize_round_trip_is_stable():
    X = make("hex", n=2)
    doc = serialize(X)
    Y = load_complex(json.loads(json.dumps(doc)))
    assert json.dumps(serialize(Y), sort_keys=True) == json.dumps(doc, sort_keys=True)


def test_interior_grid_vertex_link_is_a_circle():
    G = vertex_link(make("grid", n=3), "v1_1")
    assert len(G.edges) == 4
    assert all(abs(w - math.pi / 2) < 1e-12 for _, _, w, _ in G.edges)
    assert abs(G.total_length() - 2 * math.pi) < 1e-12


def test_hex_interior_vertex_link():
    X = make("hex", n=2)
    full = [v for v in X.vertices if len(X.vertex_corners[X.vidx[v]]) == 3]
    G = vertex_link(X, full[0])
    assert sorted(round(w, 12) for *_, w, _ in [(e[0], e[1], e[2], e[3]) for e in G.edges]) == [round(2 * math.pi / 3, 12)] * 3


def test_triplane_singular_vertex_link_is_theta_graph():
    G = vertex_link(make("triplane", R=2), "s0")
    assert G.euler_characteristic() == -1
    arcs = {}
    for u, v, w, _ in G.edges:
        arcs.setdefault(frozenset((u, v)), []).append(w)
    # three arcs of length pi between the two singular directions
    assert len(G.nodes) == 5
    L, _ = shortest_essential_loop(G)
    assert abs(L - 2 * math.pi) < 1e-12


def test_direction_spaces():
    X = make("grid", n=2)
    assert abs(direction_space_at(X, InCell("c0_0", 0.5, 0.5)).total_length() - 2 * math.pi) < 1e-12
    assert abs(direction_space_at(X, OnEdge("v0_1|v1_1", 0.5)).total_length() - 2 * math.pi) < 1e-12
    T = make("triplane", R=2)
    G = direction_space_at(T, OnEdge(T.edge_between("s0", "s1"), 0.5))
    assert len(G.nodes) == 2 and len(G.edges) == 3
    assert all(abs(w - math.pi) < 1e-12 for *_, w, _ in [(e[0], e[1], e[2], e[3]) for e in G.edges])


def test_unknown_vertex():
    with pytest.raises(UnknownVertex):
        vertex_link(make("grid", n=2), "nope")


def test_path_lengths():
    X = make("grid", n=2)
    assert PLPath(X, [AtVertex("v0_0")]).length == 0
    assert abs(PLPath(X, [AtVertex("v0_0"), AtVertex("v1_1")]).length - math.sqrt(2)) < 1e-12
    L = PLPath(X, [AtVertex("v0_0"), AtVertex("v1_0"), AtVertex("v1_1")])
    assert abs(L.length - 2) < 1e-12


def test_location_strings_round_trip():
    for loc in (AtVertex("v0_0"), OnEdge("v0_0|v1_0", 0.25), InCell("c0_0", 0.3, 0.7)):
        assert parse_location(location_to_str(loc)) == loc


def test_same_point_across_carriers():
    X = make("grid", n=2)
    e = X.edge_between("v1_0", "v1_1")
    a = OnEdge(e, 0.5)
    assert same_point(X, a, a)
    assert not same_point(X, a, AtVertex("v1_0"))


def test_subpath_and_sampling():
    X = make("grid", n=3)
    P = PLPath(X, [AtVertex(f"v{i}_0") for i in range(4)])
    assert P.length == pytest.approx(3.0)
    S = P.subpath(0.5, 2.0)
    assert S.length == pytest.approx(1.5)
    samples = P.sample(0.5)
    assert len(samples) == 7
    assert np.allclose([s for s, _ in samples], np.arange(0, 3.01, 0.5))
