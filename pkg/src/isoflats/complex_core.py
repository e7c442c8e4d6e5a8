"""Data model and local geometry of piecewise Euclidean 2-complexes.

A complex is a finite set of convex polygons, each with its own planar
frame, glued isometrically along explicit edges.  Edges may carry any
number of cells, so non-manifold gluings are first class.
"""
from __future__ import annotations

import heapq
import json
import math
import os
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import ConvexityError, MetricError, SchemaError, UnknownVertex

TOL = 1e-9
TWO_PI = 2.0 * math.pi


# ----------------------------------------------------------------------------
# complexes


@dataclass(frozen=True)
class Edge:
    id: str
    v0: str
    v1: str
    length: float


class Cell:
    __slots__ = ("id", "corners", "coords", "sides", "signs", "angles")

    def __init__(self, id: str, corners: Sequence[str], coords: np.ndarray, sides: Sequence[str], signs: Sequence[int]):
        self.id = id
        self.corners = tuple(corners)
        self.coords = np.asarray(coords, dtype=float)
        self.sides = tuple(sides)
        self.signs = tuple(signs)
        n = len(self.corners)
        angles = []
        for i in range(n):
            p = self.coords[i]
            a = self.coords[(i + 1) % n] - p
            b = self.coords[(i - 1) % n] - p
            angles.append(math.atan2(a[0] * b[1] - a[1] * b[0], a[0] * b[0] + a[1] * b[1]))
        self.angles = tuple(angles)

    @property
    def size(self) -> int:
        return len(self.corners)

    def side_points(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        n = len(self.corners)
        return self.coords[j], self.coords[(j + 1) % n]

    def centroid(self) -> np.ndarray:
        return self.coords.mean(axis=0)

    def corner_index(self, v: str) -> int:
        return self.corners.index(v)

    def __repr__(self) -> str:
        return f"Cell({self.id!r}, corners={self.corners!r})"


class Complex2PE:
    """Immutable finite piecewise Euclidean 2-complex."""

    def __init__(self, vertices: Sequence[str], edges: Sequence[Edge], cells: Sequence[Cell], meta: dict | None = None):
        self.vertices = list(vertices)
        self.edges = list(edges)
        self.cells = list(cells)
        self.meta = dict(meta or {})
        self.vidx = {v: i for i, v in enumerate(self.vertices)}
        self.eidx = {e.id: i for i, e in enumerate(self.edges)}
        self.cidx = {c.id: i for i, c in enumerate(self.cells)}
        self.edge_cells: list[list[tuple[int, int]]] = [[] for _ in self.edges]
        self.vertex_corners: list[list[tuple[int, int]]] = [[] for _ in self.vertices]
        self.vertex_edges: list[list[int]] = [[] for _ in self.vertices]
        for ei, e in enumerate(self.edges):
            self.vertex_edges[self.vidx[e.v0]].append(ei)
            self.vertex_edges[self.vidx[e.v1]].append(ei)
        for ci, c in enumerate(self.cells):
            for j, s in enumerate(c.sides):
                self.edge_cells[self.eidx[s]].append((ci, j))
            for i, v in enumerate(c.corners):
                self.vertex_corners[self.vidx[v]].append((ci, i))
        self._links: dict[str, MetricGraph] = {}
        self._max_diam: float | None = None

    # convenience accessors
    def edge(self, eid: str) -> Edge:
        return self.edges[self.eidx[eid]]

    def cell(self, cid: str) -> Cell:
        return self.cells[self.cidx[cid]]

    def edge_between(self, u: str, v: str) -> str | None:
        if u not in self.vidx:
            raise UnknownVertex(u)
        for ei in self.vertex_edges[self.vidx[u]]:
            e = self.edges[ei]
            if (e.v0 == u and e.v1 == v) or (e.v0 == v and e.v1 == u):
                return e.id
        return None

    def cells_of_edge(self, eid: str) -> list[int]:
        return [ci for ci, _ in self.edge_cells[self.eidx[eid]]]

    def max_cell_diameter(self) -> float:
        if self._max_diam is None:
            best = 0.0
            for c in self.cells:
                d = c.coords[:, None, :] - c.coords[None, :, :]
                best = max(best, float(np.sqrt((d ** 2).sum(-1)).max()))
            self._max_diam = best
        return self._max_diam

    def euler_characteristic(self) -> int:
        return len(self.vertices) - len(self.edges) + len(self.cells)

    def corner_angle_sum(self, v: str) -> float:
        if v not in self.vidx:
            raise UnknownVertex(v)
        return sum(self.cells[ci].angles[i] for ci, i in self.vertex_corners[self.vidx[v]])

    def __repr__(self) -> str:
        return f"Complex2PE(V={len(self.vertices)}, E={len(self.edges)}, F={len(self.cells)})"


def _load_document(doc: Any) -> dict:
    if isinstance(doc, dict):
        return doc
    if isinstance(doc, (str, os.PathLike)):
        text = str(doc)
        if not text.lstrip().startswith("{") and os.path.exists(text):
            with open(text) as fh:
                text = fh.read()
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}") from exc
    raise SchemaError(f"unsupported document type {type(doc).__name__}")


def _num(x: Any, what: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise SchemaError(f"{what} must be a number")
    x = float(x)
    if not math.isfinite(x):
        raise SchemaError(f"{what} must be finite")
    return x


def load_complex(doc: Any, tol: float = TOL) -> Complex2PE:
    """Parse and validate a complex document (dict, JSON text or path)."""
    d = _load_document(doc)
    for key in ("vertices", "edges", "cells"):
        if key not in d or not isinstance(d[key], list):
            raise SchemaError(f"missing list {key!r}")
    verts = d["vertices"]
    if not all(isinstance(v, str) for v in verts):
        raise SchemaError("vertex ids must be strings")
    if len(set(verts)) != len(verts):
        raise SchemaError("duplicate vertex id")
    vset = set(verts)
    edges: list[Edge] = []
    seen = set()
    for e in d["edges"]:
        if not isinstance(e, dict) or not {"id", "v0", "v1", "length"} <= set(e):
            raise SchemaError(f"malformed edge {e!r}")
        eid = e["id"]
        if not isinstance(eid, str) or eid in seen:
            raise SchemaError(f"bad or duplicate edge id {eid!r}")
        seen.add(eid)
        if e["v0"] not in vset or e["v1"] not in vset:
            raise SchemaError(f"edge {eid} references unknown vertex")
        if e["v0"] == e["v1"]:
            raise SchemaError(f"edge {eid} is a loop (unsupported)")
        length = _num(e["length"], f"length of {eid}")
        if length <= 0:
            raise MetricError(f"edge {eid} has nonpositive length")
        edges.append(Edge(eid, e["v0"], e["v1"], length))
    emap = {e.id: e for e in edges}
    cells: list[Cell] = []
    cseen = set()
    for c in d["cells"]:
        if not isinstance(c, dict) or not {"id", "corners", "coords", "sides"} <= set(c):
            raise SchemaError(f"malformed cell {c!r}")
        cid = c["id"]
        if not isinstance(cid, str) or cid in cseen:
            raise SchemaError(f"bad or duplicate cell id {cid!r}")
        cseen.add(cid)
        corners, coords, sides = c["corners"], c["coords"], c["sides"]
        n = len(corners)
        if n < 3 or len(coords) != n or len(sides) != n:
            raise SchemaError(f"cell {cid}: corners/coords/sides length mismatch")
        if len(set(corners)) != n or any(v not in vset for v in corners):
            raise SchemaError(f"cell {cid}: corners must be distinct known vertices")
        if len(set(sides)) != n or any(s not in emap for s in sides):
            raise SchemaError(f"cell {cid}: sides must be distinct known edges")
        try:
            xy = np.array([[_num(p[0], "coord"), _num(p[1], "coord")] for p in coords], dtype=float)
        except (TypeError, IndexError, KeyError) as exc:
            raise SchemaError(f"cell {cid}: bad coordinates") from exc
        signs = []
        for j in range(n):
            e = emap[sides[j]]
            a, b = corners[j], corners[(j + 1) % n]
            if (e.v0, e.v1) == (a, b):
                signs.append(1)
            elif (e.v0, e.v1) == (b, a):
                signs.append(-1)
            else:
                raise SchemaError(f"cell {cid}: side {j} edge {e.id} does not join {a},{b}")
            seg = float(np.hypot(*(xy[(j + 1) % n] - xy[j])))
            if abs(seg - e.length) > tol:
                raise MetricError(f"cell {cid}: side {j} has length {seg}, edge {e.id} declares {e.length}")
        for j in range(n):
            a = xy[(j + 1) % n] - xy[j]
            b = xy[(j + 2) % n] - xy[(j + 1) % n]
            cross = a[0] * b[1] - a[1] * b[0]
            if cross <= tol * max(1.0, float(np.hypot(*a)) * float(np.hypot(*b))):
                raise ConvexityError(f"cell {cid} is not strictly convex counterclockwise at corner {(j + 1) % n}")
        cells.append(Cell(cid, corners, xy, sides, signs))
    used = set()
    for c in cells:
        used.update(c.sides)
    unused = [e.id for e in edges if e.id not in used]
    if unused:
        raise SchemaError(f"edges not on any cell: {unused[:5]}")
    X = Complex2PE(verts, edges, cells, d.get("meta"))
    if verts and not _connected(X):
        raise SchemaError("complex is not connected")
    return X


def _connected(X: Complex2PE) -> bool:
    seen = {0}
    stack = [0]
    while stack:
        vi = stack.pop()
        for ei in X.vertex_edges[vi]:
            e = X.edges[ei]
            for w in (e.v0, e.v1):
                wi = X.vidx[w]
                if wi not in seen:
                    seen.add(wi)
                    stack.append(wi)
    return len(seen) == len(X.vertices)


def serialize(X: Complex2PE) -> dict:
    out = {
        "vertices": list(X.vertices),
        "edges": [{"id": e.id, "v0": e.v0, "v1": e.v1, "length": e.length} for e in X.edges],
        "cells": [
            {"id": c.id, "corners": list(c.corners), "coords": c.coords.tolist(), "sides": list(c.sides)}
            for c in X.cells
        ],
    }
    if X.meta:
        out["meta"] = X.meta
    return out


def dump_complex(X: Complex2PE, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(serialize(X), fh, indent=1, sort_keys=True)


def complex_from_parts(vertices, edges, cells, meta=None) -> Complex2PE:
    """Build from ``(id, v0, v1, length)`` edges and ``(id, corners, coords, sides)`` cells, validating."""
    doc = {
        "vertices": list(vertices),
        "edges": [{"id": e[0], "v0": e[1], "v1": e[2], "length": float(e[3])} for e in edges],
        "cells": [{"id": c[0], "corners": list(c[1]), "coords": np.asarray(c[2], float).tolist(), "sides": list(c[3])} for c in cells],
    }
    if meta:
        doc["meta"] = meta
    return load_complex(doc)


# ----------------------------------------------------------------------------
# point locations


@dataclass(frozen=True)
class AtVertex:
    v: str


@dataclass(frozen=True)
class OnEdge:
    e: str
    t: float  # measured from v0 towards v1


@dataclass(frozen=True)
class InCell:
    c: str
    x: float
    y: float

    @property
    def xy(self) -> np.ndarray:
        return np.array([self.x, self.y])


PointLocation = AtVertex | OnEdge | InCell


def validate_location(X: Complex2PE, loc: PointLocation, tol: float = TOL) -> None:
    if isinstance(loc, AtVertex):
        if loc.v not in X.vidx:
            raise UnknownVertex(loc.v)
    elif isinstance(loc, OnEdge):
        if loc.e not in X.eidx:
            raise SchemaError(f"unknown edge {loc.e}")
        if not (0.0 < loc.t < 1.0):
            raise SchemaError("edge parameter must lie strictly in (0,1)")
    elif isinstance(loc, InCell):
        if loc.c not in X.cidx:
            raise SchemaError(f"unknown cell {loc.c}")
        c = X.cell(loc.c)
        if not point_in_polygon(c.coords, loc.xy, strict=True, tol=tol):
            raise SchemaError(f"point {loc.xy} not strictly inside cell {loc.c}")
    else:
        raise SchemaError(f"not a location: {loc!r}")


def carriers(X: Complex2PE, loc: PointLocation) -> list[tuple[int, np.ndarray]]:
    """All (cell index, planar coordinates) pairs representing ``loc``."""
    if isinstance(loc, AtVertex):
        vi = X.vidx.get(loc.v)
        if vi is None:
            raise UnknownVertex(loc.v)
        return [(ci, X.cells[ci].coords[i].copy()) for ci, i in X.vertex_corners[vi]]
    if isinstance(loc, OnEdge):
        out = []
        for ci, j in X.edge_cells[X.eidx[loc.e]]:
            c = X.cells[ci]
            a, b = c.side_points(j)
            t = loc.t if c.signs[j] > 0 else 1.0 - loc.t
            out.append((ci, a + t * (b - a)))
        return out
    ci = X.cidx[loc.c]
    return [(ci, loc.xy)]


def carrier_in(X: Complex2PE, loc: PointLocation, ci: int) -> np.ndarray | None:
    for cj, xy in carriers(X, loc):
        if cj == ci:
            return xy
    return None


def locate_in_cell(X: Complex2PE, ci: int, xy: Sequence[float], snap: float = 2e-9) -> PointLocation:
    """Canonical location of the point with cell-frame coordinates ``xy``."""
    c = X.cells[ci]
    p = np.asarray(xy, dtype=float)
    n = c.size
    for i in range(n):
        if np.hypot(*(c.coords[i] - p)) <= snap:
            return AtVertex(c.corners[i])
    for j in range(n):
        a, b = c.side_points(j)
        ab = b - a
        L2 = float(ab @ ab)
        t = float((p - a) @ ab) / L2
        if -snap <= t <= 1 + snap:
            foot = a + t * ab
            if np.hypot(*(foot - p)) <= snap:
                t = min(max(t, 0.0), 1.0)
                L = math.sqrt(L2)
                if t * L <= snap:
                    return AtVertex(c.corners[j])
                if (1 - t) * L <= snap:
                    return AtVertex(c.corners[(j + 1) % n])
                return OnEdge(c.sides[j], t if c.signs[j] > 0 else 1.0 - t)
    return InCell(c.id, float(p[0]), float(p[1]))


def same_point(X: Complex2PE, a: PointLocation, b: PointLocation, tol: float = 1e-9) -> bool:
    ca = carriers(X, a)
    for ci, xy in carriers(X, b):
        for cj, xz in ca:
            if ci == cj and np.hypot(*(xy - xz)) <= tol:
                return True
    return False


def location_to_str(loc: PointLocation) -> str:
    if isinstance(loc, AtVertex):
        return f"v:{loc.v}"
    if isinstance(loc, OnEdge):
        return f"e:{loc.e}:{loc.t!r}"
    return f"c:{loc.c}:{loc.x!r},{loc.y!r}"


def parse_location(text: str) -> PointLocation:
    kind, _, rest = text.partition(":")
    try:
        if kind == "v":
            return AtVertex(rest)
        if kind == "e":
            eid, _, t = rest.rpartition(":")
            return OnEdge(eid, float(t))
        if kind == "c":
            cid, _, xy = rest.rpartition(":")
            x, y = xy.split(",")
            return InCell(cid, float(x), float(y))
    except ValueError as exc:
        raise SchemaError(f"bad location {text!r}") from exc
    raise SchemaError(f"bad location {text!r}; expected v:<id>, e:<id>:<t> or c:<id>:<x>,<y>")


# ----------------------------------------------------------------------------
# planar helpers used everywhere


def cross2(a, b) -> float:
    return float(a[0] * b[1] - a[1] * b[0])


def point_in_polygon(poly: np.ndarray, p: np.ndarray, strict: bool = False, tol: float = TOL) -> bool:
    n = len(poly)
    for i in range(n):
        a = poly[i]
        b = poly[(i + 1) % n]
        ab = b - a
        cr = cross2(ab, p - a) / max(float(np.hypot(*ab)), 1e-300)
        if strict and cr <= tol:
            return False
        if not strict and cr < -tol:
            return False
    return True


def point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    ab = b - a
    L2 = float(ab @ ab)
    if L2 == 0.0:
        return float(np.hypot(*(p - a)))
    t = min(max(float((p - a) @ ab) / L2, 0.0), 1.0)
    return float(np.hypot(*(a + t * ab - p)))


def point_polygon_distance(poly: np.ndarray, p: np.ndarray) -> float:
    if point_in_polygon(poly, p):
        return 0.0
    n = len(poly)
    return min(point_segment_distance(p, poly[i], poly[(i + 1) % n]) for i in range(n))


def rigid_map(src_a, src_b, dst_a, dst_b, reflect: bool = False):
    """Isometry sending src_a->dst_a, src_b->dst_b (optionally orientation reversing)."""
    u = np.asarray(src_b, float) - np.asarray(src_a, float)
    w = np.asarray(dst_b, float) - np.asarray(dst_a, float)
    au = math.atan2(u[1], u[0])
    aw = math.atan2(w[1], w[0])
    if reflect:
        # reflect across the x-axis first, then rotate
        au = -au
        F = np.array([[1.0, 0.0], [0.0, -1.0]])
    else:
        F = np.eye(2)
    th = aw - au
    R = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]]) @ F
    t = np.asarray(dst_a, float) - R @ np.asarray(src_a, float)
    return R, t


def polygons_overlap(P: np.ndarray, Q: np.ndarray, tol: float = 1e-9) -> bool:
    """Separating-axis test for convex polygons; touching counts as disjoint."""
    for poly in (P, Q):
        n = len(poly)
        for i in range(n):
            e = poly[(i + 1) % n] - poly[i]
            nrm = np.array([-e[1], e[0]]) / max(float(np.hypot(*e)), 1e-300)
            pa = P @ nrm
            qa = Q @ nrm
            if pa.max() <= qa.min() + tol or qa.max() <= pa.min() + tol:
                return False
    return True


# ----------------------------------------------------------------------------
# metric graphs


@dataclass
class MetricGraph:
    """Weighted multigraph; loops and parallel edges allowed."""

    nodes: list = field(default_factory=list)
    edges: list = field(default_factory=list)  # (u, v, length, label)

    def __post_init__(self):
        self._index = {n: i for i, n in enumerate(self.nodes)}
        for u, v, w, _ in self.edges:
            if w <= 0:
                raise MetricError("metric graph edge lengths must be positive")

    def index(self, n) -> int:
        return self._index[n]

    def add_node(self, n):
        if n not in self._index:
            self._index[n] = len(self.nodes)
            self.nodes.append(n)

    def add_edge(self, u, v, length, label=None):
        if length <= 0:
            raise MetricError("metric graph edge lengths must be positive")
        self.add_node(u)
        self.add_node(v)
        self.edges.append((u, v, float(length), label))

    def total_length(self) -> float:
        return float(sum(e[2] for e in self.edges))

    def euler_characteristic(self) -> int:
        return len(self.nodes) - len(self.edges)

    def adjacency(self) -> list[list[tuple[int, float, int]]]:
        adj: list[list[tuple[int, float, int]]] = [[] for _ in self.nodes]
        for k, (u, v, w, _) in enumerate(self.edges):
            iu, iv = self._index[u], self._index[v]
            adj[iu].append((iv, w, k))
            if iu != iv:
                adj[iv].append((iu, w, k))
        return adj

    def dijkstra(self, src: int, skip_edge: int | None = None, adj=None) -> tuple[list[float], list[tuple[int, int] | None]]:
        adj = adj if adj is not None else self.adjacency()
        dist = [math.inf] * len(self.nodes)
        prev: list[tuple[int, int] | None] = [None] * len(self.nodes)
        dist[src] = 0.0
        pq = [(0.0, src)]
        while pq:
            d, u = heapq.heappop(pq)
            if d > dist[u]:
                continue
            for v, w, k in adj[u]:
                if k == skip_edge:
                    continue
                nd = d + w
                if nd < dist[v]:
                    dist[v] = nd
                    prev[v] = (u, k)
                    heapq.heappush(pq, (nd, v))
        return dist, prev

    def is_connected(self) -> bool:
        if not self.nodes:
            return True
        dist, _ = self.dijkstra(0)
        return all(math.isfinite(x) for x in dist)


@dataclass(frozen=True)
class GraphPoint:
    """A point of a metric graph: on edge ``k`` at distance ``offset`` from its first node."""

    edge: int
    offset: float


def graph_point_distance(G: MetricGraph, a: GraphPoint, b: GraphPoint, adj=None) -> tuple[float, list[int]]:
    """Distance between two points of G and the edges crossed by a shortest route."""
    d, edges, _ = graph_point_route(G, a, b, adj)
    return d, edges


def graph_point_route(G: MetricGraph, a: GraphPoint, b: GraphPoint, adj=None) -> tuple[float, list[int], list[int]]:
    """Shortest route between two points of G.

    Returns (length, edges, nodes): the edge indices traversed in order,
    starting with the edge carrying ``a`` and ending with the edge carrying
    ``b``, and the node index between each consecutive pair of edges.
    """
    adj = adj if adj is not None else G.adjacency()
    ua, va, wa, _ = G.edges[a.edge]
    ub, vb, wb, _ = G.edges[b.edge]
    best = math.inf
    E: list[int] = [a.edge]
    N: list[int] = []
    if a.edge == b.edge:
        best = abs(a.offset - b.offset)
    ends_a = [(G.index(ua), a.offset), (G.index(va), wa - a.offset)]
    ends_b = [(G.index(ub), b.offset), (G.index(vb), wb - b.offset)]
    for na, da in ends_a:
        dist, prev = G.dijkstra(na, adj=adj)
        for nb, db in ends_b:
            tot = da + dist[nb] + db
            if tot < best - 1e-15:
                best = tot
                chain, nodes = [], [nb]
                cur = nb
                while cur != na:
                    p, k = prev[cur]
                    chain.append(k)
                    nodes.append(p)
                    cur = p
                E = [a.edge] + chain[::-1] + [b.edge]
                N = nodes[::-1]
    # a route never needs to run back along the edge it just used
    i = 0
    while i < len(E) - 1:
        if E[i] == E[i + 1]:
            del E[i + 1]
            del N[i]
        else:
            i += 1
    return best, E, N


def link_node(eid: str):
    return ("e", eid)


def vertex_link(X: Complex2PE, v: str) -> MetricGraph:
    """Link of ``v``: a node per incident edge end, an arc per cell corner."""
    if v not in X.vidx:
        raise UnknownVertex(v)
    cached = X._links.get(v)
    if cached is not None:
        return cached
    vi = X.vidx[v]
    G = MetricGraph([], [])
    for ei in X.vertex_edges[vi]:
        G.add_node(link_node(X.edges[ei].id))
    for ci, i in X.vertex_corners[vi]:
        c = X.cells[ci]
        n = c.size
        # arc runs from the side leaving the corner to the side entering it
        G.add_edge(link_node(c.sides[i]), link_node(c.sides[(i - 1) % n]), c.angles[i], (c.id, i))
    X._links[v] = G
    return G


def direction_space_at(X: Complex2PE, loc: PointLocation) -> MetricGraph:
    validate_location(X, loc)
    if isinstance(loc, AtVertex):
        return vertex_link(X, loc.v)
    if isinstance(loc, OnEdge):
        e = X.edge(loc.e)
        G = MetricGraph([("pole", e.v0), ("pole", e.v1)], [])
        for ci, j in X.edge_cells[X.eidx[loc.e]]:
            G.add_edge(("pole", e.v1), ("pole", e.v0), math.pi, (X.cells[ci].id, j))
        return G
    G = MetricGraph([("dir", 0)], [])
    G.add_edge(("dir", 0), ("dir", 0), TWO_PI, (loc.c, None))
    return G


def _ccw_angle(a: np.ndarray, b: np.ndarray) -> float:
    """Counterclockwise angle from a to b in [0, 2pi)."""
    ang = math.atan2(cross2(a, b), float(a @ b))
    return ang if ang >= 0 else ang + TWO_PI


def direction_point(X: Complex2PE, loc: PointLocation, ci: int, d: np.ndarray, G: MetricGraph | None = None) -> GraphPoint:
    """The point of ``direction_space_at(loc)`` for direction ``d`` inside cell ``ci``."""
    c = X.cells[ci]
    if G is None:
        G = direction_space_at(X, loc)
    if isinstance(loc, AtVertex):
        i = c.corner_index(loc.v)
        n = c.size
        ref = c.coords[(i + 1) % n] - c.coords[i]
        off = _ccw_angle(ref, d)
        ang = c.angles[i]
        if off > ang:
            # numerically just outside the wedge: snap to the nearer side
            off = ang if off - ang < TWO_PI - off else 0.0
        k = next(k for k, e in enumerate(G.edges) if e[3] == (c.id, i))
        return GraphPoint(k, min(max(off, 0.0), ang))
    if isinstance(loc, OnEdge):
        e = X.edge(loc.e)
        j = c.sides.index(loc.e)
        a, b = c.side_points(j)
        # direction towards v1 in this cell's frame
        to_v1 = (b - a) if c.signs[j] > 0 else (a - b)
        # the cell lies to the left of the ccw side a->b, sweep from v1 pole through the interior
        if c.signs[j] > 0:
            off = _ccw_angle(to_v1, d)
        else:
            off = _ccw_angle(d, to_v1)
        if off > math.pi:
            off = math.pi if off - math.pi < TWO_PI - off else 0.0
        k = next(k for k, ed in enumerate(G.edges) if ed[3] == (c.id, j))
        return GraphPoint(k, min(max(off, 0.0), math.pi))
    off = math.atan2(d[1], d[0]) % TWO_PI
    return GraphPoint(0, off)


def direction_distance(X: Complex2PE, loc: PointLocation, a: tuple[int, np.ndarray], b: tuple[int, np.ndarray]) -> float:
    """Angle between two directions at ``loc`` measured in its direction space."""
    G = direction_space_at(X, loc)
    if isinstance(loc, InCell):
        ang = abs(math.atan2(cross2(a[1], b[1]), float(a[1] @ b[1])))
        return ang
    pa = direction_point(X, loc, a[0], a[1], G)
    pb = direction_point(X, loc, b[0], b[1], G)
    return graph_point_distance(G, pa, pb)[0]


# ----------------------------------------------------------------------------
# piecewise linear paths


class PLPath:
    """Piecewise linear path: breakpoints plus the cell carrying each segment."""

    __slots__ = ("X", "points", "cells", "seg", "cum")

    def __init__(self, X: Complex2PE, points: Sequence[PointLocation], cells: Sequence[int] | None = None):
        self.X = X
        self.points = list(points)
        if not self.points:
            raise SchemaError("a path needs at least one point")
        if cells is None:
            cells = [common_cell(X, a, b) for a, b in zip(self.points, self.points[1:])]
        self.cells = list(cells)
        if len(self.cells) != len(self.points) - 1:
            raise SchemaError("one carrying cell per segment required")
        seg = []
        for k, ci in enumerate(self.cells):
            a = carrier_in(X, self.points[k], ci)
            b = carrier_in(X, self.points[k + 1], ci)
            if a is None or b is None:
                raise SchemaError(f"segment {k} endpoints do not share cell {X.cells[ci].id}")
            seg.append((a, b))
        self.seg = seg
        lens = [float(np.hypot(*(b - a))) for a, b in seg]
        self.cum = np.concatenate([[0.0], np.cumsum(lens)]) if lens else np.array([0.0])

    @property
    def length(self) -> float:
        return float(self.cum[-1])

    @property
    def start(self) -> PointLocation:
        return self.points[0]

    @property
    def end(self) -> PointLocation:
        return self.points[-1]

    def segment_length(self, k: int) -> float:
        return float(self.cum[k + 1] - self.cum[k])

    def locate(self, s: float) -> tuple[int, np.ndarray]:
        """(segment index, cell-frame coordinates) of the point at arclength ``s``."""
        if not self.cells:
            ci = carriers(self.X, self.points[0])[0]
            return -1, ci[1]
        s = min(max(s, 0.0), self.length)
        k = int(np.searchsorted(self.cum, s, side="right") - 1)
        k = min(max(k, 0), len(self.cells) - 1)
        L = self.segment_length(k)
        a, b = self.seg[k]
        t = 0.0 if L == 0 else (s - self.cum[k]) / L
        return k, a + min(max(t, 0.0), 1.0) * (b - a)

    def point_at(self, s: float) -> PointLocation:
        if not self.cells:
            return self.points[0]
        if s <= 0:
            return self.points[0]
        if s >= self.length:
            return self.points[-1]
        k, xy = self.locate(s)
        return locate_in_cell(self.X, self.cells[k], xy)

    def sample(self, spacing: float, include_breakpoints: bool = False) -> list[tuple[float, PointLocation]]:
        L = self.length
        n = max(1, int(math.ceil(L / spacing - 1e-12))) if L > 0 else 0
        ss = [L * i / n for i in range(n + 1)] if n else [0.0]
        if include_breakpoints:
            ss = sorted(set(ss) | set(float(x) for x in self.cum))
        return [(s, self.point_at(s)) for s in ss]

    def reversed(self) -> "PLPath":
        return PLPath(self.X, self.points[::-1], self.cells[::-1])

    def subpath(self, s0: float, s1: float) -> "PLPath":
        if s1 < s0:
            return self.subpath(s1, s0).reversed()
        if not self.cells or s1 - s0 <= 0:
            return PLPath(self.X, [self.point_at(s0)], [])
        k0, _ = self.locate(s0)
        k1, _ = self.locate(s1)
        if s1 >= self.length:
            k1 = len(self.cells) - 1
        pts = [self.point_at(s0)]
        cells = []
        for k in range(k0, k1 + 1):
            if k > k0:
                pts.append(self.points[k])
            cells.append(self.cells[k])
        pts.append(self.point_at(s1))
        return clean_path(PLPath(self.X, pts, cells))

    def concat(self, other: "PLPath") -> "PLPath":
        if not same_point(self.X, self.end, other.start, 1e-8):
            raise SchemaError("paths do not concatenate")
        return PLPath(self.X, self.points + other.points[1:], self.cells + other.cells)

    def cell_ids(self) -> list[str]:
        return [self.X.cells[c].id for c in self.cells]

    def to_json(self) -> dict:
        return {
            "length": self.length,
            "breakpoints": [location_to_str(p) for p in self.points],
            "cells": self.cell_ids(),
        }

    def __repr__(self) -> str:
        return f"PLPath(n={len(self.points)}, length={self.length:.6g})"


def common_cell(X: Complex2PE, a: PointLocation, b: PointLocation) -> int:
    ca = {ci for ci, _ in carriers(X, a)}
    common = [ci for ci, _ in carriers(X, b) if ci in ca]
    if not common:
        raise SchemaError(f"{a} and {b} share no cell")
    return min(common)


def clean_path(P: PLPath, tol: float = 1e-12) -> PLPath:
    """Drop zero-length segments and redundant collinear breakpoints."""
    X = P.X
    if not P.cells:
        return P
    pts = [P.points[0]]
    cells: list[int] = []
    for k, ci in enumerate(P.cells):
        a, b = P.seg[k]
        if np.hypot(*(b - a)) <= tol:
            continue
        pts.append(P.points[k + 1])
        cells.append(ci)
    if not cells:
        return PLPath(X, [P.points[0]], [])
    # a segment along an edge may be carried by either side; keep the previous cell
    for k in range(1, len(cells)):
        if cells[k] != cells[k - 1] and carrier_in(X, pts[k], cells[k - 1]) is not None \
                and carrier_in(X, pts[k + 1], cells[k - 1]) is not None:
            cells[k] = cells[k - 1]
    # merge collinear consecutive segments in the same cell
    changed = True
    while changed:
        changed = False
        for k in range(len(cells) - 1):
            if cells[k] != cells[k + 1]:
                continue
            a = carrier_in(X, pts[k], cells[k])
            m = carrier_in(X, pts[k + 1], cells[k])
            b = carrier_in(X, pts[k + 2], cells[k])
            u, w = m - a, b - m
            if abs(cross2(u, w)) <= tol * max(1.0, float(np.hypot(*u) * np.hypot(*w))) and float(u @ w) > 0:
                del pts[k + 1]
                del cells[k + 1]
                changed = True
                break
    return PLPath(X, pts, cells)


def path_length(P: PLPath) -> float:
    return P.length


def path_from_cell_points(X: Complex2PE, pieces: Iterable[tuple[int, np.ndarray]]) -> PLPath:
    """Build a path from (cell, frame point) pairs where consecutive pairs share their cell."""
    items = list(pieces)
    pts = []
    cells = []
    for k, (ci, xy) in enumerate(items):
        pts.append(locate_in_cell(X, ci, xy))
        if k:
            cells.append(items[k - 1][0] if items[k - 1][0] == ci else ci)
    return PLPath(X, pts, cells)
