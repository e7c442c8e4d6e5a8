"""Flat regions: developing maps, flat discs, triplanes and isolated-flats diagnostics."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .complex_core import (
    TOL,
    TWO_PI,
    AtVertex,
    Complex2PE,
    OnEdge,
    PointLocation,
    location_to_str,
    polygons_overlap,
    rigid_map,
    vertex_link,
)
from .errors import DisconnectedRegion, SchemaError
from .mesh import get_mesh

MESH_H = 0.05


@dataclass
class FlatDisc:
    X: Complex2PE
    cells: frozenset
    placement: dict = field(repr=False)
    center: PointLocation | None = None
    radius: float = 0.0
    name: str | None = None

    def cell_ids(self) -> list[str]:
        return sorted(self.X.cells[ci].id for ci in self.cells)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "center": location_to_str(self.center) if self.center is not None else None,
            "radius": self.radius,
            "cells": self.cell_ids(),
        }


@dataclass
class Obstruction:
    kind: str  # link | branch | holonomy | overlap
    where: str
    value: float = float("nan")

    def to_json(self) -> dict:
        return {"obstruction": self.kind, "where": self.where, "value": self.value}


class _Developer:
    """Incremental developing map of a growing set of cells."""

    def __init__(self, X: Complex2PE, tol: float = TOL, grid: float = 2.0):
        self.X = X
        self.tol = tol
        self.place: dict[int, np.ndarray] = {}
        self.vsum: dict[str, float] = {}
        self.ecount: dict[int, int] = {}
        self._bins: dict[tuple[int, int], list[int]] = {}
        self._g = grid

    def _neighbour_frame(self, ci: int, cj: int, eid: str) -> np.ndarray:
        X = self.X
        e = X.edge(eid)
        ci_c, cj_c = X.cells[ci], X.cells[cj]
        P = self.place[ci]
        pa = P[ci_c.corner_index(e.v0)]
        pb = P[ci_c.corner_index(e.v1)]
        qa = cj_c.coords[cj_c.corner_index(e.v0)]
        qb = cj_c.coords[cj_c.corner_index(e.v1)]
        side_i = _side(pa, pb, P.mean(axis=0))
        for reflect in (False, True):
            R, t = rigid_map(qa, qb, pa, pb, reflect)
            Q = cj_c.coords @ R.T + t
            if _side(pa, pb, Q.mean(axis=0)) * side_i < 0:
                return Q
        raise SchemaError("could not unfold across an edge")

    def _bbox_keys(self, Q: np.ndarray):
        lo = np.floor(Q.min(axis=0) / self._g).astype(int)
        hi = np.floor(Q.max(axis=0) / self._g).astype(int)
        for a in range(lo[0], hi[0] + 1):
            for b in range(lo[1], hi[1] + 1):
                yield (a, b)

    def placeable(self, ci: int, region: set) -> bool:
        return any(cj in self.place for eid in self.X.cells[ci].sides for cj, _ in self.X.edge_cells[self.X.eidx[eid]] if cj != ci)

    def add(self, ci: int) -> Obstruction | None:
        X = self.X
        c = X.cells[ci]
        if not self.place:
            Q = c.coords - c.centroid()
        else:
            Q = None
            for eid in c.sides:
                for cj, _ in X.edge_cells[X.eidx[eid]]:
                    if cj != ci and cj in self.place:
                        Q = self._neighbour_frame(cj, ci, eid)
                        break
                if Q is not None:
                    break
            if Q is None:
                raise DisconnectedRegion(f"cell {c.id} does not meet the developed region along an edge")
        for i, v in enumerate(c.corners):
            s = self.vsum.get(v, 0.0) + c.angles[i]
            if s > TWO_PI + self.tol:
                return Obstruction("link", f"v:{v}", s)
        # branching and holonomy against every placed neighbour
        for j, eid in enumerate(c.sides):
            ei = X.eidx[eid]
            if self.ecount.get(ei, 0) >= 2:
                return Obstruction("branch", f"e:{eid}", self.ecount[ei] + 1)
            for cj, _ in X.edge_cells[ei]:
                if cj != ci and cj in self.place:
                    Q2 = self._neighbour_frame(cj, ci, eid)
                    dev = float(np.abs(Q2 - Q).max())
                    if dev > self.tol:
                        return Obstruction("holonomy", f"e:{eid}", dev)
        # injectivity
        seen = set()
        for key in self._bbox_keys(Q):
            for cj in self._bins.get(key, ()):
                if cj in seen:
                    continue
                seen.add(cj)
                if polygons_overlap(Q, self.place[cj], 1e-7):
                    return Obstruction("overlap", f"c:{X.cells[cj].id}")
        # commit
        self.place[ci] = Q
        for key in self._bbox_keys(Q):
            self._bins.setdefault(key, []).append(ci)
        for eid in c.sides:
            ei = X.eidx[eid]
            self.ecount[ei] = self.ecount.get(ei, 0) + 1
        for i, v in enumerate(c.corners):
            self.vsum[v] = self.vsum.get(v, 0.0) + c.angles[i]
        return None

    def closed_vertex_check(self) -> Obstruction | None:
        """Vertices whose whole star was developed must have angle 2pi."""
        X = self.X
        for v, s in sorted(self.vsum.items()):
            if all(ci in self.place for ci, _ in X.vertex_corners[X.vidx[v]]):
                if abs(s - TWO_PI) > self.tol and _is_interior(X, v):
                    return Obstruction("link", f"v:{v}", s)
        return None


def _is_interior(X: Complex2PE, v: str) -> bool:
    G = vertex_link(X, v)
    return all(d == 2 for d in _degrees(G)) and G.is_connected()


def _degrees(G) -> list[int]:
    deg = [0] * len(G.nodes)
    for u, w, _, _ in G.edges:
        deg[G.index(u)] += 1
        deg[G.index(w)] += 1
    return deg


def _side(a, b, p) -> float:
    return float((b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]))


def develop_region(X: Complex2PE, seed, region, tol: float = TOL) -> FlatDisc | Obstruction:
    """Unfold ``region`` breadth first from ``seed``; a FlatDisc or the first obstruction."""
    seed = X.cidx[seed] if isinstance(seed, str) else int(seed)
    reg = {X.cidx[c] if isinstance(c, str) else int(c) for c in region}
    if seed not in reg:
        raise DisconnectedRegion("seed is not in the region")
    dev = _Developer(X, tol)
    order = [seed]
    seen = {seed}
    q = deque([seed])
    while q:
        ci = q.popleft()
        for eid in X.cells[ci].sides:
            for cj, _ in X.edge_cells[X.eidx[eid]]:
                if cj in reg and cj not in seen:
                    seen.add(cj)
                    order.append(cj)
                    q.append(cj)
    if len(seen) != len(reg):
        raise DisconnectedRegion("region is not connected through edges")
    for ci in order:
        obs = dev.add(ci)
        if obs is not None:
            return obs
    obs = dev.closed_vertex_check()
    if obs is not None:
        return obs
    return FlatDisc(X, frozenset(reg), dev.place)


def flat_from_cells(X: Complex2PE, cells, name: str | None = None) -> FlatDisc:
    cells = [X.cidx[c] if isinstance(c, str) else int(c) for c in cells]
    res = develop_region(X, min(cells), cells)
    if isinstance(res, Obstruction):
        raise SchemaError(f"region {name or ''} is not flat: {res.kind} at {res.where}")
    res.name = name
    return res


def meta_flats(X: Complex2PE) -> list[FlatDisc]:
    """Flats recorded by a generator, in name order."""
    return [flat_from_cells(X, cells, name) for name, cells in sorted(X.meta.get("flats", {}).items())]


# ----------------------------------------------------------------------------
# flat discs about a point


def _cell_distances(X: Complex2PE, fld, center: PointLocation) -> np.ndarray:
    from .complex_core import carriers

    m = fld.mesh
    d = np.array([float(fld.dist[m.cell_slice(ci)[0]].min()) for ci in range(len(X.cells))])
    for ci, _ in carriers(X, center):
        d[ci] = 0.0
    return d


def _frontier_distance(X: Complex2PE, region: set, fld, exclude_edges=frozenset()) -> float:
    """Distance from the field source to the topological frontier of the union of region cells."""
    m = fld.mesh
    best = math.inf
    ecount: dict[int, int] = {}
    for ci in region:
        for eid in X.cells[ci].sides:
            ei = X.eidx[eid]
            ecount[ei] = ecount.get(ei, 0) + 1
    exclude_v = set()
    for ei in exclude_edges:
        exclude_v.update((X.edges[ei].v0, X.edges[ei].v1))
    for ei, k in ecount.items():
        if ei in exclude_edges:
            continue
        if k == 2 and len(X.edge_cells[ei]) == 2:
            continue
        e = X.edges[ei]
        nodes = [X.vidx[e.v0], X.vidx[e.v1]]
        base, nseg = int(m.edge_base[ei]), int(m.edge_nseg[ei])
        nodes += list(range(base, base + nseg - 1))
        best = min(best, float(fld.dist[nodes].min()))
    verts = {v for ci in region for v in X.cells[ci].corners}
    for v in verts:
        if v in exclude_v:
            continue
        if any(ci not in region for ci, _ in X.vertex_corners[X.vidx[v]]):
            best = min(best, float(fld.dist[X.vidx[v]]))
    return best


def grow_flat_disc(X: Complex2PE, center: PointLocation, r_target: float, h: float = MESH_H) -> FlatDisc:
    """Largest verified flat disc about ``center`` of radius at most ``r_target``."""
    fld = get_mesh(X, h).field(center)
    dc = _cell_distances(X, fld, center)
    order = sorted((float(dc[ci]), ci) for ci in range(len(X.cells)) if dc[ci] < r_target - 1e-12)
    dev = _Developer(X)
    rho = r_target
    pending: list[tuple[float, int]] = []
    for d, ci in order:
        if dev.place and not dev.placeable(ci, set()):
            pending.append((d, ci))
            continue
        obs = dev.add(ci)
        if obs is not None:
            rho = d
            break
        progress = True
        while progress and pending:
            progress = False
            for item in list(pending):
                if dev.placeable(item[1], set()):
                    pending.remove(item)
                    if dev.add(item[1]) is not None:
                        rho = min(rho, item[0])
                        pending.clear()
                        break
                    progress = True
        if rho < r_target:
            break
    if pending:
        rho = min(rho, min(d for d, _ in pending))
    region = set(dev.place)
    if not region:
        return FlatDisc(X, frozenset(), {}, center, 0.0)
    obs = dev.closed_vertex_check()
    radius = 0.0 if obs is not None else max(0.0, min(rho, r_target, _frontier_distance(X, region, fld)))
    if radius > r_target - 1e-9:
        radius = r_target
    return FlatDisc(X, frozenset(region), dev.place, center, radius)


def find_flats(X: Complex2PE, rmin: float | None = None, h: float = MESH_H) -> list[FlatDisc]:
    """Maximal flat discs of radius at least rmin, centred at vertices, skipping covered centres."""
    if rmin is None:
        rmin = 3.0 * X.max_cell_diameter()
    found: list[FlatDisc] = []
    covered: set[str] = set()
    big = sum(e.length for e in X.edges)
    for v in X.vertices:
        if v in covered:
            continue
        if abs(X.corner_angle_sum(v) - TWO_PI) > TOL:
            continue
        F = grow_flat_disc(X, AtVertex(v), big, h)
        if F.radius >= rmin - 1e-9:
            F.name = f"flat{len(found)}"
            found.append(F)
            for ci in F.cells:
                covered.update(X.cells[ci].corners)
    return found


# ----------------------------------------------------------------------------
# triplanes


@dataclass
class TriplaneWitness:
    segment: list[str]
    center: PointLocation
    half_discs: list[FlatDisc] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "segment": list(self.segment),
            "center": location_to_str(self.center),
            "half_discs": [sorted(X_id for X_id in F.cell_ids()) for F in self.half_discs],
        }


def _link_distance(X: Complex2PE, v: str, e1: str, e2: str) -> float:
    from .complex_core import GraphPoint, graph_point_distance, link_node

    G = vertex_link(X, v)
    a, b = G.index(link_node(e1)), G.index(link_node(e2))
    d, _ = G.dijkstra(a)
    return d[b]


def _point_along(X: Complex2PE, verts: list[str], edges: list[str], s: float) -> PointLocation:
    acc = 0.0
    for k, eid in enumerate(edges):
        L = X.edge(eid).length
        if acc + L >= s - 1e-12:
            t = (s - acc) / L
            if t <= 1e-12:
                return AtVertex(verts[k])
            if t >= 1 - 1e-12:
                return AtVertex(verts[k + 1])
            e = X.edge(eid)
            return OnEdge(eid, t if e.v0 == verts[k] else 1 - t)
        acc += L
    return AtVertex(verts[-1])


def _windows(X: Complex2PE, length: float, cap: int = 4000):
    """Locally geodesic edge paths of branching edges with total length >= length."""
    branch = {ei for ei in range(len(X.edges)) if len(X.edge_cells[ei]) >= 3}
    at: dict[str, list[int]] = {}
    for ei in sorted(branch):
        e = X.edges[ei]
        at.setdefault(e.v0, []).append(ei)
        at.setdefault(e.v1, []).append(ei)
    out = []
    seen = set()
    for start in sorted(branch):
        e = X.edges[start]
        for v0 in (e.v0, e.v1):
            v1 = e.v1 if v0 == e.v0 else e.v0
            stack = [([v0, v1], [start], e.length)]
            while stack and len(out) < cap:
                verts, edges, L = stack.pop()
                if L >= length - 1e-9:
                    key = tuple(edges) if edges[0] <= edges[-1] else tuple(reversed(edges))
                    if key not in seen:
                        seen.add(key)
                        out.append((verts, [X.edges[k].id for k in edges]))
                    continue
                v = verts[-1]
                for nk in at.get(v, []):
                    if nk in edges:
                        continue
                    ne = X.edges[nk]
                    w = ne.v1 if ne.v0 == v else ne.v0
                    if w in verts:
                        continue
                    if _link_distance(X, v, X.edges[edges[-1]].id, ne.id) < math.pi - 1e-9:
                        continue
                    stack.append((verts + [w], edges + [nk], L + ne.length))
    return out


def detect_triplane(X: Complex2PE, R: float, h: float = MESH_H) -> TriplaneWitness | None:
    """Three flat half-discs of radius R glued along a branching geodesic segment."""
    mesh = get_mesh(X, h)
    for verts, edges in _windows(X, 2 * R):
        m = _point_along(X, verts, edges, R)
        fld = mesh.field(m, cutoff=R + 4 * h)
        dc = _cell_distances(X, fld, m)
        ball = {ci for ci in range(len(X.cells)) if dc[ci] < R - 1e-9}
        sigma = {X.eidx[e] for e in edges}
        mid = _mid_edge(X, verts, edges, R)
        firsts = sorted(ci for ci, _ in X.edge_cells[X.eidx[mid]] if ci in ball)
        discs = []
        used: set[int] = set()
        for c0 in firsts:
            if c0 in used:
                continue
            region = _flood(X, c0, ball, sigma)
            used |= region
            res = develop_region(X, c0, region)
            if isinstance(res, Obstruction):
                continue
            if _frontier_distance(X, region, fld, exclude_edges=frozenset(sigma)) < R - 2 * h:
                continue
            res.center = m
            res.radius = R
            discs.append(res)
        if len(discs) >= 3:
            return TriplaneWitness(list(edges), m, discs[:3])
    return None


def _mid_edge(X: Complex2PE, verts, edges, s: float) -> str:
    acc = 0.0
    for eid in edges:
        L = X.edge(eid).length
        if acc + L >= s - 1e-12:
            return eid
        acc += L
    return edges[-1]


def _flood(X: Complex2PE, c0: int, allowed: set, barrier: set) -> set:
    seen = {c0}
    stack = [c0]
    while stack:
        ci = stack.pop()
        for eid in X.cells[ci].sides:
            ei = X.eidx[eid]
            if ei in barrier:
                continue
            for cj, _ in X.edge_cells[ei]:
                if cj in allowed and cj not in seen:
                    seen.add(cj)
                    stack.append(cj)
    return seen


# ----------------------------------------------------------------------------
# isolated flats diagnostics


@dataclass
class FlatProximityTable:
    rows: list  # (flat i, flat j, k, diameter)
    psi: dict
    L_hat: float
    uncertainty: float

    def to_json(self) -> dict:
        return {
            "rows": [{"flats": [a, b], "k": k, "diameter": d} for a, b, k, d in self.rows],
            "psi": {str(k): v for k, v in sorted(self.psi.items())},
            "L_hat": self.L_hat,
            "uncertainty": self.uncertainty,
        }


def _set_diameter(mesh, nodes: np.ndarray) -> float:
    """Double-sweep estimate of the diameter of a node set."""
    if len(nodes) == 0:
        return 0.0
    a = int(nodes[0])
    f = mesh.field(mesh.node_location(a))
    b = int(nodes[int(np.argmax(f.dist[nodes]))])
    f = mesh.field(mesh.node_location(b))
    return float(f.dist[nodes].max())


def flat_proximity_table(X: Complex2PE, flats: list[FlatDisc], ks, h: float = MESH_H) -> FlatProximityTable:
    ks = sorted(float(k) for k in ks)
    mesh = get_mesh(X, h)
    fields = [mesh.field(sorted(F.cells)).dist for F in flats]
    rows = []
    psi = {k: 0.0 for k in ks}
    names = [F.name or f"flat{i}" for i, F in enumerate(flats)]
    for i in range(len(flats)):
        for j in range(i + 1, len(flats)):
            for k in ks:
                sel = np.nonzero((fields[i] <= k + 1e-9) & (fields[j] <= k + 1e-9))[0]
                d = _set_diameter(mesh, sel)
                rows.append((names[i], names[j], k, d))
                psi[k] = max(psi[k], d)
    # neighbourhoods grow with k, so the estimate is made monotone
    run = 0.0
    for k in ks:
        run = max(run, psi[k])
        psi[k] = run
    if 0.0 in psi:
        L_hat = psi[0.0]
    else:
        L_hat = flat_proximity_table(X, flats, [0.0], h).psi[0.0] if flats else 0.0
    return FlatProximityTable(rows, psi, L_hat, 2 * h)
