"""Steiner-point mesh distances on a complex.

Every edge is cut into pieces of length at most ``h``; the cut points plus
the vertices are the mesh nodes, and any two nodes on the boundary of a
common cell are joined by the straight segment through that cell.  Mesh
distances are lengths of genuine paths, so they never undercut the true
distance, and they exceed it by O(h).

The Dijkstra kernel is compiled when the extension is available; setting
``ISOFLATS_BACKEND=python`` forces the numpy fallback.
"""
from __future__ import annotations

import heapq
import math
import os
from dataclasses import dataclass

import numpy as np

from .complex_core import (
    AtVertex,
    Complex2PE,
    InCell,
    OnEdge,
    PLPath,
    PointLocation,
    carriers,
    clean_path,
)

try:
    if os.environ.get("ISOFLATS_BACKEND", "").lower() == "python":
        raise ImportError("python backend requested")
    from . import _kernel

    BACKEND = "cython"
except ImportError:  # pragma: no cover - depends on the build
    _kernel = None
    BACKEND = "python"


def dijkstra_python(cell_ptr, cell_nodes, cell_xy, node_ptr, node_cell, node_local, seed_nodes, seed_dist, targets, cutoff):
    """Reference implementation of the compiled kernel."""
    n = len(node_ptr) - 1
    dist = np.full(n, math.inf)
    pred = np.full(n, -1, dtype=np.int_)
    pcell = np.full(n, -1, dtype=np.int_)
    done = np.zeros(n, dtype=bool)
    want = set(int(t) for t in targets)
    pq = []
    for u, d in zip(seed_nodes, seed_dist):
        if d < dist[u]:
            dist[u] = d
            heapq.heappush(pq, (float(d), int(u)))
    while pq:
        du, u = heapq.heappop(pq)
        if done[u] or du > dist[u]:
            continue
        done[u] = True
        if du > cutoff:
            break
        if u in want:
            want.discard(u)
            if not want:
                break
        for k in range(node_ptr[u], node_ptr[u + 1]):
            c = node_cell[k]
            a, b = cell_ptr[c], cell_ptr[c + 1]
            nodes = cell_nodes[a:b]
            xy = cell_xy[a:b]
            dx = xy[:, 0] - xy[node_local[k], 0]
            dy = xy[:, 1] - xy[node_local[k], 1]
            nd = du + np.sqrt(dx * dx + dy * dy)
            better = (nd < dist[nodes]) & ~done[nodes]
            if not better.any():
                continue
            idx = nodes[better]
            dist[idx] = nd[better]
            pred[idx] = u
            pcell[idx] = c
            for v, d in zip(idx.tolist(), nd[better].tolist()):
                heapq.heappush(pq, (d, v))
    return dist, pred, pcell


def run_dijkstra(*args, backend: str | None = None):
    backend = backend or BACKEND
    if backend == "cython":
        if _kernel is None:
            raise RuntimeError("compiled kernel not available")
        return _kernel.dijkstra(*args)
    return dijkstra_python(*args)


class SteinerMesh:
    def __init__(self, X: Complex2PE, h: float):
        if not h > 0:
            raise ValueError("mesh spacing must be positive")
        self.X = X
        self.h = float(h)
        nV = len(X.vertices)
        # node numbering: vertices first, then interior edge points edge by edge
        self.edge_nseg = np.array([max(1, math.ceil(e.length / h - 1e-12)) for e in X.edges], dtype=np.int_)
        self.edge_base = np.zeros(len(X.edges), dtype=np.int_)
        nxt = nV
        for ei, k in enumerate(self.edge_nseg):
            self.edge_base[ei] = nxt
            nxt += k - 1
        self.n_nodes = nxt
        cell_ptr = [0]
        cell_nodes: list[int] = []
        cell_xy: list[np.ndarray] = []
        for c in X.cells:
            for j in range(c.size):
                a, b = c.side_points(j)
                ei = X.eidx[c.sides[j]]
                k = int(self.edge_nseg[ei])
                cell_nodes.append(X.vidx[c.corners[j]])
                cell_xy.append(a)
                # interior nodes of side j, walked from corner j to corner j+1
                for r in range(1, k):
                    t = r / k
                    idx = r if c.signs[j] > 0 else k - r
                    cell_nodes.append(int(self.edge_base[ei]) + idx - 1)
                    cell_xy.append(a + t * (b - a))
            cell_ptr.append(len(cell_nodes))
        self.cell_ptr = np.array(cell_ptr, dtype=np.int_)
        self.cell_nodes = np.array(cell_nodes, dtype=np.int_)
        self.cell_xy = np.ascontiguousarray(np.array(cell_xy, dtype=float).reshape(-1, 2))
        order = np.argsort(self.cell_nodes, kind="stable")
        counts = np.bincount(self.cell_nodes, minlength=self.n_nodes)
        self.node_ptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int_)
        cell_of_slot = np.repeat(np.arange(len(X.cells)), np.diff(self.cell_ptr))
        self.node_cell = cell_of_slot[order].astype(np.int_)
        self.node_local = (order - self.cell_ptr[self.node_cell]).astype(np.int_)

    # node <-> location
    def node_location(self, u: int) -> PointLocation:
        X = self.X
        if u < len(X.vertices):
            return AtVertex(X.vertices[u])
        ei = int(np.searchsorted(self.edge_base, u, side="right") - 1)
        r = u - int(self.edge_base[ei]) + 1
        return OnEdge(X.edges[ei].id, r / int(self.edge_nseg[ei]))

    def cell_slice(self, ci: int) -> tuple[np.ndarray, np.ndarray]:
        a, b = self.cell_ptr[ci], self.cell_ptr[ci + 1]
        return self.cell_nodes[a:b], self.cell_xy[a:b]

    def node_xy_in(self, u: int, ci: int) -> np.ndarray:
        nodes, xy = self.cell_slice(ci)
        return xy[int(np.nonzero(nodes == u)[0][0])]

    def location_nodes(self, loc: PointLocation) -> list[int]:
        """Mesh nodes coinciding with ``loc`` (empty unless it is a node)."""
        X = self.X
        if isinstance(loc, AtVertex):
            return [X.vidx[loc.v]]
        if isinstance(loc, OnEdge):
            ei = X.eidx[loc.e]
            k = int(self.edge_nseg[ei])
            r = loc.t * k
            if abs(r - round(r)) * X.edges[ei].length < 1e-12 and 0 < round(r) < k:
                return [int(self.edge_base[ei]) + int(round(r)) - 1]
        return []

    # seeding
    def _seeds_for_points(self, pts: list[tuple[int, np.ndarray, float]]):
        """pts: (cell, frame point, initial offset); returns per-node seed distance and source cell."""
        best = {}
        for ci, xy, off in pts:
            nodes, nxy = self.cell_slice(ci)
            d = off + np.sqrt(((nxy - xy) ** 2).sum(1))
            for u, du in zip(nodes.tolist(), d.tolist()):
                if u not in best or du < best[u][0]:
                    best[u] = (du, ci)
        return best

    def field(self, source, cutoff: float = math.inf, targets=None, backend: str | None = None) -> "MeshField":
        """Distance field from a location, a PLPath or a collection of cell indices."""
        X = self.X
        pts: list[tuple[int, np.ndarray, float]] = []
        direct: list[tuple[int, np.ndarray, np.ndarray | None]] = []
        if isinstance(source, (AtVertex, OnEdge, InCell)):
            for ci, xy in carriers(X, source):
                pts.append((ci, xy, 0.0))
                direct.append((ci, xy, None))
        elif isinstance(source, PLPath):
            for k, ci in enumerate(source.cells):
                a, b = source.seg[k]
                direct.append((ci, a, b))
            for ci, xy in carriers(X, source.start):
                pts.append((ci, xy, 0.0))
                direct.append((ci, xy, None))
            for ci, xy in carriers(X, source.end):
                pts.append((ci, xy, 0.0))
                direct.append((ci, xy, None))
        else:
            cells = sorted(set(int(c) for c in source))
            for ci in cells:
                nodes, nxy = self.cell_slice(ci)
                for p in nxy:
                    pts.append((ci, p, 0.0))
                direct.append((ci, None, None))
        best = self._seeds_for_points(pts)
        if isinstance(source, PLPath):
            # a path seeds every node of its carrying cells exactly
            for k, ci in enumerate(source.cells):
                a, b = source.seg[k]
                nodes, nxy = self.cell_slice(ci)
                for u, p in zip(nodes.tolist(), nxy):
                    du = _seg_dist(p, a, b)
                    if u not in best or du < best[u][0]:
                        best[u] = (du, ci)
        seed_nodes = np.array(list(best.keys()), dtype=np.int_)
        seed_dist = np.array([best[u][0] for u in best], dtype=float)
        seed_cell = {u: best[u][1] for u in best}
        tg = np.array(sorted(set(targets)) if targets is not None else [], dtype=np.int_)
        dist, pred, pcell = run_dijkstra(
            self.cell_ptr, self.cell_nodes, self.cell_xy, self.node_ptr, self.node_cell, self.node_local,
            seed_nodes, seed_dist, tg, float(cutoff), backend=backend,
        )
        return MeshField(self, source, dist, pred, pcell, seed_cell, direct)


def _seg_dist(p, a, b) -> float:
    ab = b - a
    L2 = float(ab @ ab)
    if L2 == 0.0:
        return float(np.hypot(*(p - a)))
    t = min(max(float((p - a) @ ab) / L2, 0.0), 1.0)
    return float(np.hypot(*(a + t * ab - p)))


def _cell_member_dist(X: Complex2PE, ci: int, p: np.ndarray) -> float:
    from .complex_core import point_polygon_distance

    return point_polygon_distance(X.cells[ci].coords, p)


@dataclass
class MeshField:
    mesh: SteinerMesh
    source: object
    dist: np.ndarray
    pred: np.ndarray
    pcell: np.ndarray
    seed_cell: dict
    direct: list

    def _direct(self, ci: int, xy: np.ndarray) -> float:
        best = math.inf
        for cj, a, b in self.direct:
            if cj != ci:
                continue
            if a is None:
                return 0.0  # inside a source cell
            best = min(best, float(np.hypot(*(xy - a))) if b is None else _seg_dist(xy, a, b))
        return best

    def value_in_cell(self, ci: int, xy: np.ndarray) -> tuple[float, int]:
        """(distance, best node or -1 for a direct segment) for a frame point of cell ci."""
        nodes, nxy = self.mesh.cell_slice(ci)
        d = self.dist[nodes] + np.sqrt(((nxy - xy) ** 2).sum(1))
        k = int(np.argmin(d))
        best, node = float(d[k]), int(nodes[k])
        dd = self._direct(ci, xy)
        if dd <= best:
            return dd, -1
        return best, node

    def distance_to(self, loc: PointLocation) -> float:
        return min(self.value_in_cell(ci, xy)[0] for ci, xy in carriers(self.mesh.X, loc))

    def node_values(self) -> np.ndarray:
        return self.dist

    def path_to(self, loc: PointLocation) -> PLPath:
        """Mesh path from the source (a location) to ``loc``."""
        X = self.mesh.X
        best = (math.inf, -1, -1, None)
        for ci, xy in carriers(X, loc):
            d, node = self.value_in_cell(ci, xy)
            if d < best[0]:
                best = (d, node, ci, xy)
        d, node, ci, xy = best
        if not math.isfinite(d):
            from .errors import NoPathFound

            raise NoPathFound("target unreachable")
        if not isinstance(self.source, (AtVertex, OnEdge, InCell)):
            raise TypeError("path extraction needs a point source")
        pts = [loc]
        cells = []
        if node < 0:
            pts.append(self.source)
            cells.append(ci)
        else:
            if self.mesh.node_location(node) != loc:
                pts.append(self.mesh.node_location(node))
                cells.append(ci)
            u = node
            while self.pred[u] >= 0:
                cells.append(int(self.pcell[u]))
                u = int(self.pred[u])
                pts.append(self.mesh.node_location(u))
            if self.mesh.node_location(u) != self.source:
                pts.append(self.source)
                cells.append(self.seed_cell[u])
        pts.reverse()
        cells.reverse()
        return clean_path(PLPath(X, pts, cells))


_CACHE_ATTR = "_mesh_cache"


def get_mesh(X: Complex2PE, h: float) -> SteinerMesh:
    cache = X.__dict__.setdefault(_CACHE_ATTR, {})
    key = round(float(h), 12)
    m = cache.get(key)
    if m is None:
        if len(cache) > 4:
            cache.clear()
        m = SteinerMesh(X, h)
        cache[key] = m
    return m


def mesh_distance(X: Complex2PE, p: PointLocation, q: PointLocation, h: float, backend: str | None = None) -> float:
    M = get_mesh(X, h)
    targets = set()
    for ci, _ in carriers(X, q):
        targets.update(M.cell_slice(ci)[0].tolist())
    return M.field(p, targets=targets, backend=backend).distance_to(q)
