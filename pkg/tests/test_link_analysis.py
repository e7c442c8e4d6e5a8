import math
import random

import networkx as nx
import pytest

from conftest import make
from isoflats.complex_core import MetricGraph, vertex_link
from isoflats.errors import BadParams, DisconnectedGraph
from isoflats.link_analysis import check_link_condition, link_diameter, shortest_essential_loop


def nx_girth(G: MetricGraph) -> float:
    """Independent oracle: for each edge, shortest u-v path avoiding that edge."""
    best = math.inf
    for k, (u, v, w, _) in enumerate(G.edges):
        if u == v:
            best = min(best, w)
            continue
        H = nx.MultiGraph()
        H.add_nodes_from(G.nodes)
        for j, (a, b, wj, _) in enumerate(G.edges):
            if j != k:
                H.add_edge(a, b, weight=wj)
        try:
            best = min(best, w + nx.dijkstra_path_length(H, u, v))
        except nx.NetworkXNoPath:
            pass
    return best


def random_graph(rng, n, m):
    G = MetricGraph([f"n{i}" for i in range(n)], [])
    for j in range(m):
        u, v = rng.randrange(n), rng.randrange(n)
        G.add_edge(f"n{u}", f"n{v}", rng.uniform(0.1, 3.0), f"e{j}")
    return G


@pytest.mark.parametrize("seed", range(40))
def test_girth_matches_networkx(seed):
    rng = random.Random(seed)
    G = random_graph(rng, rng.randint(2, 9), rng.randint(1, 14))
    L, cyc = shortest_essential_loop(G)
    ref = nx_girth(G)
    if math.isinf(ref):
        assert math.isinf(L) and cyc == []
    else:
        assert abs(L - ref) < 1e-12
        assert abs(sum(G.edges[k][2] for k in cyc) - L) < 1e-12


def test_tree_has_no_loop():
    G = MetricGraph(["a", "b", "c"], [("a", "b", 1.0, "x"), ("b", "c", 2.0, "y")])
    assert shortest_essential_loop(G) == (math.inf, [])


def test_bigon_girth():
    G = MetricGraph(["a", "b"], [("a", "b", 1.0, "x"), ("a", "b", 2.5, "y")])
    assert shortest_essential_loop(G)[0] == pytest.approx(3.5)


def test_circle_diameter_is_half_length():
    G = MetricGraph(["a", "b", "c"], [("a", "b", 1.0, "x"), ("b", "c", 1.0, "y"), ("c", "a", 1.0, "z")])
    assert link_diameter(G) == pytest.approx(1.5)


def test_theta_graph_diameter():
    # three arcs of length pi: antipodal midpoints sit at distance pi
    G = MetricGraph(["p", "q"], [("p", "q", math.pi, str(i)) for i in range(3)])
    assert link_diameter(G) == pytest.approx(math.pi)


def test_segment_diameter():
    G = MetricGraph(["a", "b", "c"], [("a", "b", 1.0, "x"), ("b", "c", 2.0, "y")])
    assert link_diameter(G) == pytest.approx(3.0)


def test_disconnected_diameter_raises():
    G = MetricGraph(["a", "b", "c", "d"], [("a", "b", 1.0, "x"), ("c", "d", 1.0, "y")])
    with pytest.raises(DisconnectedGraph):
        link_diameter(G)


@pytest.mark.parametrize("kind,params,ok", [
    ("grid", {"n": 4}, True),
    ("hex", {"n": 3}, True),
    ("cone", {"k": 5, "n": 2}, True),
    ("cone", {"k": 4, "n": 2}, True),
    ("triplane", {"R": 2}, True),
    ("moussong_ball", {"L": "cycle4", "r": 2}, True),
    ("moussong_ball", {"L": "petersen", "r": 1}, True),
    ("cone", {"k": 3, "n": 2}, False),
])
def test_link_verdicts(kind, params, ok):
    v = check_link_condition(make(kind, **params))
    assert v.passed is ok


def test_cone3_failure_witness():
    v = check_link_condition(make("cone", k=3, n=2))
    assert v.status == "fail"
    assert v.loop_length == pytest.approx(3 * math.pi / 2)
    assert len(v.loop) == 3
    doc = v.to_json()
    assert doc["worst_vertex"] == v.worst_vertex


def test_flat_grid_has_boundary_links():
    # a corner vertex has a single quarter arc: no loop, verdict still pass
    X = make("grid", n=2)
    assert shortest_essential_loop(vertex_link(X, "v0_0"))[0] == math.inf


@pytest.mark.parametrize("spec", ["cycle4", "cycle5", "complete4", "petersen"])
def test_moussong_link_is_isomorphic_to_defining_graph(spec):
    X = make("moussong_ball", L=spec, r=1)
    G = vertex_link(X, "v0")
    H = nx.MultiGraph()
    H.add_edges_from((u, v) for u, v, _, _ in G.edges)
    ref = nx.Graph(X.meta["link_graph"]["edges"])
    assert nx.is_isomorphic(nx.Graph(H), ref)
    assert H.number_of_edges() == ref.number_of_edges()
    assert all(abs(w - 2 * math.pi / 3) < 1e-12 for _, _, w, _ in G.edges)


def test_moussong_rejects_short_girth():
    with pytest.raises(BadParams):
        make("moussong_ball", L="cycle2", r=1)
