import math

import numpy as np
import pytest

from conftest import make
from isoflats import mesh
from isoflats.complex_core import AtVertex, InCell
from isoflats.experiments import random_point
from isoflats.geodesics import distance
from isoflats.mesh import SteinerMesh, mesh_distance

needs_kernel = pytest.mark.skipif(mesh._kernel is None, reason="compiled kernel not built")


@needs_kernel
@pytest.mark.parametrize("kind,params", [
    ("grid", {"n": 4}), ("cone", {"k": 5, "n": 2}), ("triplane", {"R": 2}), ("hex", {"n": 2}), ("cone", {"k": 3, "n": 2}),
])
def test_backends_agree(kind, params):
    X = make(kind, **params)
    M = SteinerMesh(X, 0.1)
    src = InCell(X.cells[0].id, *X.cells[0].coords.mean(0))
    a = M.field(src, backend="cython").node_values()
    b = M.field(src, backend="python").node_values()
    assert np.max(np.abs(a - b)) < 1e-12


def test_node_count_on_unit_edges():
    X = make("grid", n=2)
    M = SteinerMesh(X, 0.25)
    # 9 vertices plus 3 interior nodes on each of 12 edges
    assert M.n_nodes == 9 + 12 * 3


def test_mesh_is_upper_bound_and_converges():
    X = make("cone", k=5, n=2)
    rng = np.random.default_rng(5)
    p, q = random_point(X, rng), random_point(X, rng)
    true = distance(X, p, q)
    gaps = [mesh_distance(X, p, q, h) - true for h in (0.2, 0.1, 0.05, 0.02)]
    assert all(g >= -1e-9 for g in gaps)
    assert gaps[-1] <= 0.04


def test_mesh_exact_along_grid_lines():
    X = make("grid", n=3)
    assert mesh_distance(X, AtVertex("v0_0"), AtVertex("v3_0"), 0.5) == pytest.approx(3.0)
    assert mesh_distance(X, AtVertex("v0_0"), AtVertex("v3_3"), 0.5) == pytest.approx(3 * math.sqrt(2))


def test_mesh_path_length_matches_field():
    X = make("triplane", R=2)
    M = SteinerMesh(X, 0.1)
    p = InCell("q1_0_1", 0.3, 1.4)
    q = InCell("q3_-1_0", -0.6, 0.7)
    F = M.field(p)
    P = F.path_to(q)
    assert P.length == pytest.approx(F.distance_to(q), abs=1e-9)


def test_bad_spacing():
    with pytest.raises(ValueError):
        SteinerMesh(make("grid", n=1), 0.0)
