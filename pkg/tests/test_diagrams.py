import json
import math

import numpy as np
import pytest

from conftest import make
from isoflats.diagrams import (
    DiscDiagram,
    build_reduced_disc_diagram,
    cancel_pair,
    fill_loop,
    find_cancelable_pair,
    is_reduced,
    parse_loop,
    reduce_diagram,
)
from isoflats.diagrams.model import from_subcomplex, gauss_bonnet_residual, vertex_curvature, whole_complex
from isoflats.errors import Exceeded, IsoflatsError, NotClosed, UnknownVertex
from isoflats.experiments import random_disc, seeded_nonreduced

HALF_PI = math.pi / 2


def square_loop(n):
    """Counterclockwise boundary of the n x n block as a vertex loop."""
    pts = [(x, 0) for x in range(n)] + [(n, y) for y in range(n)] + \
          [(x, n) for x in range(n, 0, -1)] + [(0, y) for y in range(n, 0, -1)]
    return [f"v{x}_{y}" for x, y in pts] + ["v0_0"]


def test_single_square_filling():
    X = make("grid", n=3)
    D = fill_loop(X, square_loop(1))
    assert len(D.cells) == 1
    assert D.euler_characteristic() == 1
    kappa = D.curvatures()
    assert all(abs(k - HALF_PI) < 1e-12 for k in kappa.values())
    assert gauss_bonnet_residual(D) < 1e-12


def test_two_by_two_block():
    X = make("grid", n=3)
    D = fill_loop(X, square_loop(2))
    assert len(D.cells) == 4
    assert is_reduced(D)
    assert [v for v in D.interior_vertices()] and all(abs(D.curvatures()[v]) < 1e-12 for v in D.interior_vertices())
    assert gauss_bonnet_residual(D) < 1e-12


def test_curvature_values_on_l_shape():
    X = make("grid", n=2)
    D = from_subcomplex(X, ["c0_0", "c1_0", "c0_1"])
    k = {D.vmap[v]: c for v, c in D.curvatures().items()}
    assert k["v0_0"] == pytest.approx(HALF_PI)
    assert k["v1_0"] == pytest.approx(0.0, abs=1e-12)
    assert k["v1_1"] == pytest.approx(-HALF_PI)
    assert math.fsum(k.values()) == pytest.approx(2 * math.pi)


def test_cone_apex_curvature():
    X = make("cone", k=5, n=2)
    D = whole_complex(X)
    apex = next(v for v in D.vertices if D.vmap[v] == "v0")
    assert vertex_curvature(D, apex) == pytest.approx(-HALF_PI)
    assert gauss_bonnet_residual(D) < 1e-9
    with pytest.raises(UnknownVertex):
        vertex_curvature(D, "nowhere")


@pytest.mark.parametrize("kind,params", [("grid", {"n": 5}), ("hex", {"n": 2}), ("cone", {"k": 5, "n": 2})])
def test_gauss_bonnet_random_discs(kind, params):
    X = make(kind, **params)
    rng = np.random.default_rng(4)
    seen = 0
    for _ in range(25):
        D, _ = random_disc(X, int(rng.integers(1, 9)), rng)
        if D is None:
            continue
        seen += 1
        assert D.euler_characteristic() == 1
        assert gauss_bonnet_residual(D) < 1e-9
    assert seen > 10


def test_boundary_word_matches_loop():
    X = make("grid", n=3)
    loop = square_loop(2)
    D = fill_loop(X, loop)
    word = D.boundary_word()
    assert len(word) == 8
    # the word closes up in the target
    parse_loop(X, word)


def test_open_loop_rejected():
    X = make("grid", n=2)
    with pytest.raises(NotClosed):
        fill_loop(X, ["v0_0", "v1_0", "v1_1"])


def test_budget_exceeded():
    X = make("grid", n=4)
    with pytest.raises(Exceeded):
        fill_loop(X, square_loop(3), max_cells=4)


def test_annulus_is_not_a_disc():
    X = make("grid", n=3)
    ring = [c.id for c in X.cells if c.id != "c1_1"]
    with pytest.raises(IsoflatsError):
        from_subcomplex(X, ring)


def test_json_round_trip():
    X = make("hex", n=2)
    D = whole_complex(X)
    E = DiscDiagram.from_json(X, json.dumps(D.to_json()))
    assert E.boundary_word() == D.boundary_word()
    assert len(E.cells) == len(D.cells)
    assert gauss_bonnet_residual(E) < 1e-9


@pytest.mark.parametrize("kind,params", [("grid", {"n": 5}), ("hex", {"n": 2}), ("cone", {"k": 5, "n": 2})])
def test_reduction_removes_pairs_and_keeps_boundary(kind, params):
    X = make(kind, **params)
    rng = np.random.default_rng(9)
    done = 0
    for _ in range(40):
        if done >= 3:
            break
        D0, S = random_disc(X, int(rng.integers(2, 7)), rng)
        if D0 is None:
            continue
        F = seeded_nonreduced(X, S)
        if F is None:
            continue
        done += 1
        pair = find_cancelable_pair(F)
        assert pair is not None
        R = reduce_diagram(F)
        assert is_reduced(R)
        assert R.boundary_word() == F.boundary_word()
        assert len(R.cells) <= len(F.cells) - 2
        assert all(R.curvatures()[v] <= 1e-9 for v in R.interior_vertices())
        assert gauss_bonnet_residual(R) < 1e-9
    assert done == 3


def test_single_cancellation_drops_two_cells():
    X = make("grid", n=5)
    rng = np.random.default_rng(2)
    while True:
        D0, S = random_disc(X, 4, rng)
        F = seeded_nonreduced(X, S) if D0 is not None else None
        if F is not None:
            break
    a, b, e = find_cancelable_pair(F)
    G = cancel_pair(F, a, b, e)
    assert len(G.cells) == len(F.cells) - 2
    assert G.boundary_word() == F.boundary_word()


def test_build_reduced_is_reduced():
    X = make("cone", k=5, n=2)
    D = whole_complex(X)
    R = build_reduced_disc_diagram(X, D.boundary_word())
    assert is_reduced(R)
    assert len(R.cells) == len(X.cells)
