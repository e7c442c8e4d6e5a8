import json
import math

import pytest

from isoflats.complex_core import serialize, validate_location, vertex_link
from isoflats.diagrams.model import gauss_bonnet_residual, whole_complex
from isoflats.errors import BadParams
from isoflats.generators import KINDS, generate, meta_path, meta_point
from isoflats.link_analysis import check_link_condition, shortest_essential_loop

SMALL = {
    "grid": {"n": 3},
    "hex": {"n": 2},
    "cone": {"k": 5, "n": 2},
    "moussong_ball": {"L": "cycle4", "r": 1},
    "triplane": {"R": 2},
    "delta_n": {"n": 2},
    "hyperbolic_strip": {"N": 3, "m": 1},
    "half_strip": {"N": 4, "m": 1},
    "flap_grid": {"n": 2, "m": 1},
    "cone_point": {"k": 5, "n": 2},
    "wedge_strip": {"N": 8, "H": 2},
}


def test_every_kind_covered():
    assert set(SMALL) == set(KINDS)


@pytest.mark.parametrize("kind", sorted(SMALL))
def test_kind_is_npc_and_deterministic(kind):
    X = generate(kind, **SMALL[kind])
    assert check_link_condition(X).passed
    a = json.dumps(serialize(X), sort_keys=True)
    b = json.dumps(serialize(generate(kind, **SMALL[kind])), sort_keys=True)
    assert a == b


@pytest.mark.parametrize("kind", sorted(SMALL))
def test_meta_points_and_paths_are_valid(kind):
    X = generate(kind, **SMALL[kind])
    for name in X.meta.get("points", {}):
        validate_location(X, meta_point(X, name))
    for name in X.meta.get("paths", {}):
        assert meta_path(X, name).length > 0


@pytest.mark.parametrize("kind", ["grid", "hex", "cone", "half_strip", "hyperbolic_strip", "wedge_strip", "cone_point"])
def test_surface_kinds_are_discs(kind):
    X = generate(kind, **SMALL[kind])
    D = whole_complex(X)
    assert D.euler_characteristic() == 1
    assert gauss_bonnet_residual(D) < 1e-9


def test_cone_vertex_links():
    X = generate("cone", k=5, n=2)
    L, _ = shortest_essential_loop(vertex_link(X, "v0"))
    assert L == pytest.approx(5 * math.pi / 2)
    assert not check_link_condition(generate("cone", k=3, n=1)).passed


def test_cone_point_apex():
    X = generate("cone_point", k=6, n=2)
    assert X.corner_angle_sum("o") == pytest.approx(3 * math.pi)


def test_delta_n_side_lengths():
    # unfolded: |ba| = |ac| = 2n sqrt(2) and |bc| = 2 sqrt(5) n
    n = 4
    X = generate("delta_n", n=n)
    assert meta_path(X, "ba").length == pytest.approx(2 * math.sqrt(2) * n)
    assert meta_path(X, "ac").length == pytest.approx(2 * math.sqrt(2) * n)
    assert meta_path(X, "bc").length == pytest.approx(2 * math.sqrt(5) * n)


def test_triplane_counts():
    R = 3
    X = generate("triplane", R=R)
    assert len(X.cells) == 3 * 2 * R * R
    assert len(X.meta["singular"]) == 2 * R + 1


def test_wedge_strip_curvature():
    X = generate("wedge_strip", N=8, H=2)
    five = [v for v in X.vertices if X.corner_angle_sum(v) == pytest.approx(5 * math.pi / 2)]
    assert five


@pytest.mark.parametrize("kind,params", [
    ("grid", {"n": 0}), ("cone", {"k": 2, "n": 1}), ("triplane", {"R": 0}),
    ("moussong_ball", {"L": "cycle2", "r": 1}), ("moussong_ball", {"L": "wheel", "r": 1}),
    ("grid", {"bogus": 1}), ("nope", {}),
])
def test_bad_params(kind, params):
    with pytest.raises(BadParams):
        generate(kind, **params)
