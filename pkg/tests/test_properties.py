import math

import numpy as np
from hypothesis import given, settings, strategies as st

from conftest import make
from isoflats.complex_core import MetricGraph
from isoflats.diagrams.model import gauss_bonnet_residual
from isoflats.experiments import random_disc, random_point
from isoflats.geodesics import distance
from isoflats.link_analysis import link_diameter, shortest_essential_loop
from isoflats.mesh import mesh_distance

TARGETS = [("grid", {"n": 5}), ("hex", {"n": 2}), ("cone", {"k": 5, "n": 2})]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2), st.integers(0, 10**6), st.integers(1, 10))
def test_gauss_bonnet_holds_for_any_disc(t, seed, size):
    kind, params = TARGETS[t]
    D, _ = random_disc(make(kind, **params), size, np.random.default_rng(seed))
    if D is not None:
        assert gauss_bonnet_residual(D) < 1e-9


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5), st.floats(0.1, 5)), min_size=1, max_size=12),
       st.floats(0.1, 10))
def test_girth_scales_linearly(edges, c):
    G = MetricGraph([f"n{i}" for i in range(6)], [(f"n{u}", f"n{v}", w, str(k)) for k, (u, v, w) in enumerate(edges)])
    H = MetricGraph(G.nodes, [(u, v, w * c, k) for u, v, w, k in G.edges])
    a, b = shortest_essential_loop(G)[0], shortest_essential_loop(H)[0]
    assert (math.isinf(a) and math.isinf(b)) or abs(b - c * a) <= 1e-9 * max(1, b)


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 8), st.floats(0.1, 5))
def test_cycle_diameter_is_half_length(k, w):
    G = MetricGraph([str(i) for i in range(k)], [(str(i), str((i + 1) % k), w, str(i)) for i in range(k)])
    assert abs(link_diameter(G) - k * w / 2) < 1e-9


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2), st.integers(0, 10**6))
def test_mesh_never_undercuts_geodesic(t, seed):
    kind, params = TARGETS[t]
    X = make(kind, **params)
    rng = np.random.default_rng(seed)
    p, q = random_point(X, rng), random_point(X, rng)
    d = distance(X, p, q)
    m = mesh_distance(X, p, q, 0.1)
    assert d - 1e-9 <= m <= d + 0.2
