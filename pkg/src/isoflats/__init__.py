"""Geometry of nonpositively curved piecewise Euclidean 2-complexes."""
from .complex_core import (
    AtVertex,
    Complex2PE,
    InCell,
    MetricGraph,
    OnEdge,
    PLPath,
    direction_space_at,
    load_complex,
    path_length,
    serialize,
    vertex_link,
)
from .errors import *  # noqa: F401,F403
from .flats import FlatDisc, detect_triplane, find_flats, flat_proximity_table, grow_flat_disc, meta_flats
from .generators import generate
from .geodesics import (
    alexandrov_angle,
    comparison_probe,
    distance,
    geodesic_between,
    geodesic_through,
    is_local_geodesic,
)
from .link_analysis import check_link_condition, link_diameter, shortest_essential_loop
from .rel_hyp import (
    QGParams,
    check_quasigeodesic,
    divergence_check,
    extract_broom,
    fellow_travel_certificate,
    hausdorff_distance,
    relative_thinness,
    tame_quasigeodesic,
    thinness,
)

__version__ = "0.1.0"
