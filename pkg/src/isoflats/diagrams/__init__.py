"""Disc diagrams over piecewise Euclidean complexes."""
from .build import build_reduced_disc_diagram, fill_loop, parse_loop
from .geometry import (
    FlatClosure,
    Hull,
    Preflat,
    RuffleParams,
    RuffleVerdict,
    diagram_convex_hull,
    extract_preflats,
    flat_closure,
    is_ruffled,
)
from .model import (
    DCell,
    DiscDiagram,
    from_subcomplex,
    gauss_bonnet_residual,
    subdiagram,
    vertex_curvature,
    whole_complex,
)
from .reduce import cancel_pair, find_cancelable_pair, is_reduced, reduce_diagram
