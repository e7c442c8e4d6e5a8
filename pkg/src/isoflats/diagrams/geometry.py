"""Metric questions about disc diagrams: ruffling, preflats, hulls and flat closure.

All distances are measured intrinsically, on the diagram viewed as a complex
in its own right (``D.to_complex()``).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ..complex_core import (
    AtVertex,
    InCell,
    PLPath,
    PointLocation,
    carrier_in,
    locate_in_cell,
    location_to_str,
)
from ..errors import ArcNotOnBoundary, BadParams, NotNPC, NotReduced, SchemaError
from ..mesh import get_mesh
from .model import DiscDiagram, subdiagram

MESH_H = 0.05
CURV_TOL = 1e-9


@dataclass(frozen=True)
class RuffleParams:
    R: float
    theta: float

    def __post_init__(self):
        if not (self.R > 0 and self.theta > 0):
            raise BadParams("ruffle parameters must be positive")


@dataclass
class RuffleVerdict:
    ruffled: bool
    witness: PointLocation | None = None
    s: float | None = None
    samples: int = 0

    def __bool__(self) -> bool:
        return self.ruffled

    def to_json(self) -> dict:
        out = {"status": "yes" if self.ruffled else "no", "samples": self.samples}
        if not self.ruffled:
            out["witness"] = location_to_str(self.witness)
            out["s"] = self.s
        return out


# ----------------------------------------------------------------------------
# boundary arcs


def arc_indices(D: DiscDiagram, arc) -> list[int]:
    """Positions in the outer walk covered by ``arc``.

    ``arc`` is a (start, count) pair of outer-walk positions, a list of
    positions, or a vertex sequence that runs along the outer walk.
    """
    n = len(D.outer)
    if not n:
        raise ArcNotOnBoundary("diagram has no boundary")
    if isinstance(arc, tuple) and len(arc) == 2 and all(isinstance(x, int) for x in arc):
        start, count = arc
        if not 0 < count <= n:
            raise ArcNotOnBoundary("arc length out of range")
        return [(start + i) % n for i in range(count)]
    arc = list(arc)
    if arc and all(isinstance(x, int) for x in arc):
        for a, b in zip(arc, arc[1:]):
            if b != (a + 1) % n:
                raise ArcNotOnBoundary("arc positions are not consecutive")
        return arc
    walk = D.boundary_vertex_walk()
    m = len(arc) - 1
    for s in range(n):
        if all(walk[(s + i) % n] == arc[i] for i in range(m + 1)):
            return [(s + i) % n for i in range(m)]
    raise ArcNotOnBoundary("vertex sequence is not a subpath of the boundary")


def arc_path(D: DiscDiagram, idx: list[int]) -> PLPath:
    """The arc as a path in ``D.to_complex()``."""
    Y = D.to_complex()
    pts = [AtVertex(D.tail(D.outer[idx[0]]))]
    for i in idx:
        e, _ = D.outer[i]
        if e not in Y.eidx:
            raise ArcNotOnBoundary(f"arc runs along the spur edge {e}")
        pts.append(AtVertex(D.head(D.outer[i])))
    return PLPath(Y, pts)


def is_ruffled(D: DiscDiagram, arc, params: RuffleParams, beta_counts: bool = True, h: float = MESH_H) -> RuffleVerdict:
    """Check (R, theta)-ruffling of ``arc`` by sampling it at its vertices and every R/4.

    With ``beta_counts`` the rest of the boundary cycle counts as other
    boundary (the arc form of the definition); without it only curvature
    can satisfy a ball (the whole-cycle form, for disc diagrams).
    """
    idx = arc_indices(D, arc)
    P = arc_path(D, idx)
    Y = P.X
    mesh = get_mesh(Y, h)
    R, theta = params.R, params.theta
    curv = D.curvatures()
    neg = [Y.vidx[v] for v in Y.vertices if curv[v] <= -theta + CURV_TOL]
    beta_nodes: list[int] = []
    if beta_counts:
        on_arc = set(idx)
        for i, hh in enumerate(D.outer):
            if i in on_arc:
                continue
            e = hh[0]
            for v in (D.tail(hh), D.head(hh)):
                if v in Y.vidx:
                    beta_nodes.append(Y.vidx[v])
            if e in Y.eidx:
                ei = Y.eidx[e]
                base, k = int(mesh.edge_base[ei]), int(mesh.edge_nseg[ei])
                beta_nodes.extend(range(base, base + k - 1))
    neg_arr = np.array(sorted(set(neg)), dtype=np.int_)
    beta_arr = np.array(sorted(set(beta_nodes)), dtype=np.int_)
    samples = [(0.0, P.points[0])]
    acc = 0.0
    for k in range(len(P.cells)):
        acc += P.segment_length(k)
        samples.append((acc, P.points[k + 1]))
    samples += P.sample(R / 4.0)
    samples.sort(key=lambda t: t[0])
    for s, loc in samples:
        fld = mesh.field(loc, cutoff=R + 2 * h)
        ok = False
        if len(neg_arr) and float(fld.dist[neg_arr].min()) < R + CURV_TOL:
            ok = True
        elif len(beta_arr) and float(fld.dist[beta_arr].min()) < R + CURV_TOL:
            ok = True
        if not ok:
            return RuffleVerdict(False, loc, s, len(samples))
    return RuffleVerdict(True, None, None, len(samples))


# ----------------------------------------------------------------------------
# preflats


@dataclass
class Preflat:
    cells: list[str]
    flat: str | None
    convex: bool
    min_exterior_angle: float
    boundary_edges: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "cells": self.cells,
            "flat": self.flat,
            "convex": self.convex,
            "min_exterior_angle": self.min_exterior_angle,
            "boundary_edges": self.boundary_edges,
        }


def _exterior_angles(D: DiscDiagram, cells: set[int]) -> float:
    """Smallest angle of D outside ``cells`` at frontier vertices interior to D."""
    bd = D.boundary_vertices()
    mine: set[str] = set()
    for ci in cells:
        mine.update(D.cells[ci].corners)
    outside: dict[str, float] = {}
    for ci, c in enumerate(D.cells):
        if ci in cells:
            continue
        for i, v in enumerate(c.corners):
            if v in mine:
                outside[v] = outside.get(v, 0.0) + D.corner_angle(ci, i)
    best = math.inf
    for v, a in outside.items():
        if v in bd:
            continue
        best = min(best, a)
    return best


def _components(D: DiscDiagram, cells: set[int]) -> list[set[int]]:
    ec = D.edge_cells()
    left = set(cells)
    out = []
    while left:
        s = min(left)
        comp = {s}
        stack = [s]
        while stack:
            ci = stack.pop()
            for e in D.cells[ci].sides:
                for cj, _ in ec[e]:
                    if cj in left and cj not in comp:
                        comp.add(cj)
                        stack.append(cj)
        left -= comp
        out.append(comp)
    return out


def extract_preflats(D: DiscDiagram, F) -> list[Preflat]:
    """Closures of the components of the interior of the preimage of the flat ``F``."""
    pre = {ci for ci, c in enumerate(D.cells) if c.target in F.cells}
    out = []
    ec = D.edge_cells()
    for comp in _components(D, pre):
        ext = _exterior_angles(D, comp)
        bedges = sorted({e for ci in comp for e in D.cells[ci].sides if sum(1 for cj, _ in ec[e] if cj in comp) == 1})
        out.append(Preflat(sorted(D.cells[ci].id for ci in comp), getattr(F, "name", None), ext >= math.pi - 1e-9, ext, bedges))
    return out


# ----------------------------------------------------------------------------
# hulls


def _check_npc(D: DiscDiagram) -> None:
    curv = D.curvatures()
    for v in D.interior_vertices():
        if curv[v] > CURV_TOL:
            raise NotNPC(f"interior vertex {v} has curvature {curv[v]:.6g}")


@dataclass
class Hull:
    cells: list[str]
    min_exterior_angle: float
    diagram: DiscDiagram | None = None

    @property
    def convex(self) -> bool:
        return self.min_exterior_angle >= math.pi - 1e-9

    def to_json(self) -> dict:
        return {"cells": self.cells, "min_exterior_angle": self.min_exterior_angle, "convex": self.convex}


def _cells_crossed(P: PLPath) -> set[int]:
    """Cells whose interior a path meets in a segment of positive length."""
    Y = P.X
    out = set()
    for k, ci in enumerate(P.cells):
        a, b = P.seg[k]
        if np.hypot(*(b - a)) <= 1e-12:
            continue
        loc = locate_in_cell(Y, ci, (a + b) / 2)
        if isinstance(loc, InCell):
            out.add(ci)
    return out


def _frontier_vertices(Y, cells: set[int]) -> set[str]:
    out = set()
    for ci in cells:
        for v in Y.cells[ci].corners:
            if v in out:
                continue
            star = [cj for cj, _ in Y.vertex_corners[Y.vidx[v]]]
            if any(cj not in cells for cj in star) or not _closed_star(Y, v):
                out.add(v)
    return out


def _closed_star(Y, v: str) -> bool:
    from ..complex_core import vertex_link

    G = vertex_link(Y, v)
    deg: dict = {}
    for a, b, _, _ in G.edges:
        deg[a] = deg.get(a, 0) + 1
        deg[b] = deg.get(b, 0) + 1
    return all(d == 2 for d in deg.values())


def diagram_convex_hull(D: DiscDiagram, S, h: float = MESH_H, max_rounds: int = 50) -> Hull:
    """Smallest union of cells containing S that is closed under geodesics between its vertices.

    ``S`` mixes diagram cell ids and point locations of ``D.to_complex()``.
    """
    from ..geodesics import geodesic_between

    _check_npc(D)
    Y = D.to_complex()
    cells: set[int] = set()
    points: list[PointLocation] = []
    for s in S:
        if isinstance(s, str) and s in Y.cidx:
            cells.add(Y.cidx[s])
        else:
            points.append(s)
    for a, b in itertools.combinations(points, 2):
        P, _ = geodesic_between(Y, a, b, h)
        cells |= _cells_crossed(P)
    if not cells and points:
        from ..complex_core import carriers

        cells.add(min(ci for ci, _ in carriers(Y, points[0])))
    done_pairs: set = set()
    for _ in range(max_rounds):
        verts = sorted(_frontier_vertices(Y, cells))
        locs = [AtVertex(v) for v in verts] + points
        keys = verts + [location_to_str(p) for p in points]
        grown = set(cells)
        for i, j in itertools.combinations(range(len(locs)), 2):
            key = (keys[i], keys[j])
            if key in done_pairs:
                continue
            done_pairs.add(key)
            P, _ = geodesic_between(Y, locs[i], locs[j], h)
            grown |= _cells_crossed(P)
        if grown == cells:
            break
        cells = grown
    # Y's cells are D's cells in order, with the same ids
    dcells = {D.cidx[Y.cells[ci].id] for ci in cells}
    ext = _exterior_angles(D, dcells)
    ids = sorted(D.cells[ci].id for ci in dcells)
    try:
        sub = subdiagram(D, ids)
    except SchemaError:
        sub = None
    return Hull(ids, ext, sub)


# ----------------------------------------------------------------------------
# flat closure


@dataclass
class FlatClosure:
    beta: PLPath
    D_alpha: DiscDiagram | None
    D_gamma: list[str]
    preflats: list[Preflat]

    def to_json(self) -> dict:
        return {
            "beta": self.beta.to_json(),
            "beta_length": self.beta.length,
            "D_alpha_cells": [c.id for c in self.D_alpha.cells] if self.D_alpha is not None else None,
            "D_gamma_cells": self.D_gamma,
            "preflats": [p.to_json() for p in self.preflats],
        }


def flat_closure(D: DiscDiagram, gamma_arc, R: float, flats, h: float = MESH_H) -> FlatClosure:
    """Remove preflats near the geodesic side and replace it by the geodesic beta around them.

    D_gamma is the convex hull of gamma's cells and the preflats within R of
    gamma; beta is the rest of its boundary, which is locally geodesic as seen
    from the remaining subdiagram D_alpha.
    """
    from ..geodesics import geodesic_between
    from .reduce import find_cancelable_pair

    if find_cancelable_pair(D) is not None:
        raise NotReduced("flat closure needs a reduced diagram")
    _check_npc(D)
    idx = arc_indices(D, gamma_arc)
    gamma = arc_path(D, idx)
    Y = gamma.X
    fld = get_mesh(Y, h).field(gamma)
    near: list[Preflat] = []
    removed: set[int] = set()
    for F in flats:
        for P in extract_preflats(D, F):
            cs = [D.cidx[c] for c in P.cells]
            dmin = min(float(fld.dist[get_mesh(Y, h).cell_slice(Y.cidx[D.cells[ci].id])[0]].min()) for ci in cs)
            if dmin < R:
                near.append(P)
                removed.update(cs)
    if not removed:
        return FlatClosure(gamma, D, [], [])
    # D_gamma: convex hull of the near preflats together with the cells along gamma
    ec = D.edge_cells()
    seeds = set(removed)
    for i in idx:
        seeds.update(ci for ci, _ in ec[D.outer[i][0]])
    hull = diagram_convex_hull(D, [D.cells[ci].id for ci in sorted(seeds)], h)
    if hull.diagram is None:
        raise SchemaError("hull of the preflats and gamma is not a disc")
    H = hull.diagram
    a = D.tail(D.outer[idx[0]])
    b = D.head(D.outer[idx[-1]])
    # beta is the part of the hull boundary that is not gamma, run from a to b
    walk = H.outer
    gset = {D.outer[i][0] for i in idx}
    n = len(walk)
    start_k = next((k for k in range(n) if H.tail(walk[k]) == b and walk[k][0] not in gset), None)
    if start_k is None:
        raise SchemaError("gamma's endpoints are not on the hull boundary")
    rev = []
    k = start_k
    while True:
        rev.append(walk[k])
        if H.head(walk[k]) == a:
            break
        k = (k + 1) % n
        if k == start_k:
            raise SchemaError("could not trace beta along the hull")
    pts = [AtVertex(a)] + [AtVertex(H.tail(hh)) for hh in reversed(rev)]
    beta = PLPath(Y, pts)
    rest = sorted(c.id for c in D.cells if c.id not in set(hull.cells))
    try:
        Da = subdiagram(D, rest) if rest else None
    except SchemaError:
        Da = None
    return FlatClosure(beta, Da, hull.cells, near)
