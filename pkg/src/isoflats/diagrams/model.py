"""Disc diagrams: planar combinatorial 2-complexes mapped cell-wise into a target.

A diagram cell records the target cell it maps to and an offset, with its
corners listed in the target's corner order: corner ``i`` of the diagram
cell is target corner ``offset + i``.  The planar side on which the cell
lies is a separate bit (``flip``), derived from the outer boundary walk.
The outer boundary is stored as a walk of half-edges with the diagram on
its left; the outer face is traced by its reverse.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from ..complex_core import TWO_PI, Complex2PE, complex_from_parts
from ..errors import InvariantBreach, SchemaError, UnknownVertex

HalfEdge = tuple[str, int]  # (edge id, +1 for v0->v1, -1 for v1->v0)


def twin(h: HalfEdge) -> HalfEdge:
    return (h[0], -h[1])


@dataclass
class DCell:
    id: str
    target: int  # cell index in the target complex
    offset: int
    corners: list[str]
    sides: list[str]
    flip: bool = False

    def walk(self, D: "DiscDiagram") -> list[HalfEdge]:
        """Face walk with the cell on its left."""
        n = len(self.corners)
        hs = []
        for i in range(n):
            e = self.sides[i]
            u, _ = D.edges[e]
            hs.append((e, 1 if u == self.corners[i] else -1))
        if self.flip:
            hs = [twin(h) for h in reversed(hs)]
        return hs


class DiscDiagram:
    """Disc diagram together with its combinatorial map to ``target``."""

    def __init__(self, target: Complex2PE, vertices: Iterable[str], edges: dict[str, tuple[str, str]],
                 cells: list[DCell], outer: list[HalfEdge], vmap: dict[str, str], emap: dict[str, str],
                 orient: bool = True, validate: bool = True):
        self.target = target
        self.vertices = list(vertices)
        self.edges = dict(edges)
        self.cells = list(cells)
        self.outer = list(outer)
        self.vmap = dict(vmap)
        self.emap = dict(emap)
        self.cidx = {c.id: i for i, c in enumerate(self.cells)}
        self._complex: Complex2PE | None = None
        self._curv: dict[str, float] | None = None
        self._rot: dict[str, list[str]] | None = None
        if orient:
            self._orient()
        if validate:
            self.validate()

    @property
    def rotation(self) -> dict[str, list[str]]:
        if self._rot is None:
            self._rot = self._rotation()
        return self._rot

    # ------------------------------------------------------------------
    # structure

    def head(self, h: HalfEdge) -> str:
        u, v = self.edges[h[0]]
        return v if h[1] > 0 else u

    def tail(self, h: HalfEdge) -> str:
        u, v = self.edges[h[0]]
        return u if h[1] > 0 else v

    def edge_cells(self) -> dict[str, list[tuple[int, int]]]:
        out: dict[str, list[tuple[int, int]]] = {e: [] for e in self.edges}
        for ci, c in enumerate(self.cells):
            for j, e in enumerate(c.sides):
                out[e].append((ci, j))
        return out

    def _target_dir(self, c: DCell, j: int) -> int:
        """+1 if side j of c runs (in target corner order) along the edge's stored direction."""
        u, _ = self.edges[c.sides[j]]
        return 1 if c.corners[j] == u else -1

    def _orient(self) -> None:
        """Choose flips so that the face walks induce a planar orientation."""
        if not self.cells:
            return
        ec = self.edge_cells()
        outer_dir = {}
        for e, s in self.outer:
            outer_dir.setdefault(e, []).append(s)
        flip: list[bool | None] = [None] * len(self.cells)
        for start in range(len(self.cells)):
            if flip[start] is not None:
                continue
            # seed the component from an outer edge if one is available
            seed_val = False
            for j, e in enumerate(self.cells[start].sides):
                if e in outer_dir and len(ec[e]) == 1:
                    d = self._target_dir(self.cells[start], j)
                    seed_val = d != outer_dir[e][0]
                    break
            flip[start] = seed_val
            stack = [start]
            while stack:
                ci = stack.pop()
                c = self.cells[ci]
                for j, e in enumerate(c.sides):
                    d = self._target_dir(c, j) * (-1 if flip[ci] else 1)
                    for cj, k in ec[e]:
                        if cj == ci:
                            continue
                        dk = self._target_dir(self.cells[cj], k)
                        want = dk == d  # neighbours traverse a shared edge oppositely
                        if flip[cj] is None:
                            flip[cj] = want
                            stack.append(cj)
                        elif flip[cj] != want:
                            raise SchemaError("diagram cells are not coherently orientable")
        for c, f in zip(self.cells, flip):
            c.flip = bool(f)

    def face_walks(self) -> list[list[HalfEdge]]:
        walks = [c.walk(self) for c in self.cells]
        walks.append([twin(h) for h in reversed(self.outer)])
        return walks

    def _rotation(self) -> dict[str, list[str]]:
        """Cyclic (counterclockwise) order of edge ends at each vertex."""
        succ: dict[HalfEdge, HalfEdge] = {}
        for w in self.face_walks():
            n = len(w)
            for i in range(n):
                h, g = w[i], w[(i + 1) % n]
                if g in succ:
                    raise SchemaError(f"half-edge {g} appears in two face walks")
                succ[g] = twin(h)
        rot: dict[str, list[str]] = {}
        self._succ = succ
        by_tail: dict[str, list[HalfEdge]] = {}
        for h in succ:
            by_tail.setdefault(self.tail(h), []).append(h)
        for v in self.vertices:
            outs = by_tail.get(v, [])
            if not outs:
                rot[v] = []
                continue
            cyc = [min(outs)]
            while True:
                nxt = succ[cyc[-1]]
                if nxt == cyc[0]:
                    break
                cyc.append(nxt)
                if len(cyc) > len(outs):
                    break
            if len(cyc) != len(outs):
                raise SchemaError(f"rotation at {v} is not a single cycle (pinched vertex)")
            rot[v] = [f"{'' if s > 0 else '-'}{e}" for e, s in cyc]
        return rot

    def validate(self) -> None:
        X = self.target
        for c in self.cells:
            tc = X.cells[c.target]
            n = tc.size
            if len(c.corners) != n or len(c.sides) != n:
                raise SchemaError(f"cell {c.id} size differs from its target")
            for i in range(n):
                ti = (c.offset + i) % n
                if self.vmap[c.corners[i]] != tc.corners[ti]:
                    raise SchemaError(f"cell {c.id} corner {i} maps to the wrong target vertex")
                if self.emap[c.sides[i]] != tc.sides[ti]:
                    raise SchemaError(f"cell {c.id} side {i} maps to the wrong target edge")
                u, v = self.edges[c.sides[i]]
                if {u, v} != {c.corners[i], c.corners[(i + 1) % n]}:
                    raise SchemaError(f"cell {c.id} side {i} does not join its corners")
        self._rot = self._rotation()
        # closed outer walk
        for i, h in enumerate(self.outer):
            if self.head(h) != self.tail(self.outer[(i + 1) % len(self.outer)]):
                raise SchemaError("outer boundary is not a closed walk")
        # spheres are excluded: Euler characteristic with one outer face
        V, E, F = len(self.vertices), len(self.edges), len(self.cells)
        if V - E + F + 1 != 2:
            raise SchemaError(f"not a disc diagram: V-E+F = {V - E + F}")
        if not self.outer and (E or F):
            raise SchemaError("nonempty diagram needs an outer boundary")

    # ------------------------------------------------------------------
    # metric data

    def corner_angle(self, ci: int, i: int) -> float:
        c = self.cells[ci]
        tc = self.target.cells[c.target]
        return tc.angles[(c.offset + i) % tc.size]

    def cell_coords(self, ci: int) -> np.ndarray:
        c = self.cells[ci]
        tc = self.target.cells[c.target]
        return np.roll(tc.coords, -c.offset, axis=0)

    def edge_length(self, e: str) -> float:
        return self.target.edge(self.emap[e]).length

    def degree(self, v: str) -> int:
        return len(self.rotation.get(v, []))

    def curvatures(self) -> dict[str, float]:
        if self._curv is None:
            deg = {v: 0 for v in self.vertices}
            for u, v in self.edges.values():
                deg[u] += 1
                deg[v] += 1
            corners = {v: 0 for v in self.vertices}
            ang = {v: 0.0 for v in self.vertices}
            for ci, c in enumerate(self.cells):
                for i, v in enumerate(c.corners):
                    corners[v] += 1
                    ang[v] += self.corner_angle(ci, i)
            self._curv = {v: TWO_PI - math.pi * (deg[v] - corners[v]) - ang[v] for v in self.vertices}
        return self._curv

    def boundary_vertices(self) -> set[str]:
        return {self.tail(h) for h in self.outer}

    def interior_vertices(self) -> list[str]:
        b = self.boundary_vertices()
        return [v for v in self.vertices if v not in b]

    def euler_characteristic(self) -> int:
        return len(self.vertices) - len(self.edges) + len(self.cells)

    def boundary_word(self) -> list[tuple[str, int]]:
        """Image of the outer walk: oriented target edges."""
        out = []
        for e, s in self.outer:
            u, _ = self.edges[e]
            te = self.target.edge(self.emap[e])
            same = self.vmap[u] == te.v0
            out.append((te.id, s if same else -s))
        return out

    def boundary_vertex_walk(self) -> list[str]:
        return [self.tail(h) for h in self.outer]

    # ------------------------------------------------------------------
    # conversions

    def to_complex(self) -> Complex2PE:
        """The diagram with its pulled-back metric, as a complex (spurs dropped)."""
        if self._complex is None:
            if not self.cells:
                raise SchemaError("diagram has no 2-cells")
            used_e = {e for c in self.cells for e in c.sides}
            used_v = {v for c in self.cells for v in c.corners}
            edges = []
            for e in self.edges:
                if e in used_e:
                    u, v = self.edges[e]
                    edges.append((e, u, v, self.edge_length(e)))
            cells = []
            for ci, c in enumerate(self.cells):
                cells.append((c.id, c.corners, self.cell_coords(ci), c.sides))
            self._complex = complex_from_parts([v for v in self.vertices if v in used_v], edges, cells)
        return self._complex

    def to_json(self) -> dict:
        X = self.target
        return {
            "vertices": list(self.vertices),
            "edges": [{"id": e, "v0": u, "v1": v} for e, (u, v) in self.edges.items()],
            "cells": [{"id": c.id, "corners": list(c.corners), "sides": list(c.sides)} for c in self.cells],
            "rotation": self.rotation,
            "outer_boundary": [f"{'' if s > 0 else '-'}{e}" for e, s in self.outer],
            "map": {
                "vertices": dict(self.vmap),
                "edges": dict(self.emap),
                "cells": {c.id: {"cell": X.cells[c.target].id, "offset": c.offset} for c in self.cells},
            },
        }

    @classmethod
    def from_json(cls, X: Complex2PE, doc) -> "DiscDiagram":
        if isinstance(doc, str):
            doc = json.loads(doc) if doc.lstrip().startswith("{") else json.load(open(doc))
        try:
            edges = {e["id"]: (e["v0"], e["v1"]) for e in doc["edges"]}
            cmap = doc["map"]["cells"]
            cells = [
                DCell(c["id"], X.cidx[cmap[c["id"]]["cell"]], int(cmap[c["id"]]["offset"]), list(c["corners"]), list(c["sides"]))
                for c in doc["cells"]
            ]
            outer = []
            for s in doc["outer_boundary"]:
                outer.append((s[1:], -1) if s.startswith("-") else (s, 1))
            return cls(X, doc["vertices"], edges, cells, outer, doc["map"]["vertices"], doc["map"]["edges"])
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed diagram document: {exc}") from exc

    def copy(self) -> "DiscDiagram":
        cells = [DCell(c.id, c.target, c.offset, list(c.corners), list(c.sides), c.flip) for c in self.cells]
        return DiscDiagram(self.target, self.vertices, self.edges, cells, self.outer, self.vmap, self.emap, orient=False)

    def __repr__(self) -> str:
        return f"DiscDiagram(V={len(self.vertices)}, E={len(self.edges)}, F={len(self.cells)}, |boundary|={len(self.outer)})"


# ----------------------------------------------------------------------------
# constructors


def from_subcomplex(X: Complex2PE, cells: Iterable, check_disc: bool = True) -> DiscDiagram:
    """Diagram given by a set of target cells forming a disc, with the inclusion map."""
    idx = sorted({X.cidx[c] if isinstance(c, str) else int(c) for c in cells})
    if not idx:
        raise SchemaError("empty cell set")
    cnt: dict[str, list[tuple[int, int]]] = {}
    for ci in idx:
        for j, e in enumerate(X.cells[ci].sides):
            cnt.setdefault(e, []).append((ci, j))
    if any(len(v) > 2 for v in cnt.values()):
        raise SchemaError("cell set is not a surface (edge with more than two cells)")
    verts = []
    seen = set()
    for ci in idx:
        for v in X.cells[ci].corners:
            if v not in seen:
                seen.add(v)
                verts.append(v)
    edges = {e: (X.edge(e).v0, X.edge(e).v1) for e in cnt}
    dcells = [DCell(X.cells[ci].id, ci, 0, list(X.cells[ci].corners), list(X.cells[ci].sides)) for ci in idx]
    vmap = {v: v for v in verts}
    emap = {e: e for e in edges}
    D = DiscDiagram(X, verts, edges, dcells, [], vmap, emap, orient=False, validate=False)
    D.outer = []
    D._orient()
    # boundary half-edges follow their cell's face walk
    bd = []
    for ci, c in enumerate(D.cells):
        for h in c.walk(D):
            if len(cnt[h[0]]) == 1:
                bd.append(h)
    if not bd:
        raise SchemaError("cell set has no boundary (closed surface)")
    nxt: dict[str, list[HalfEdge]] = {}
    for h in bd:
        nxt.setdefault(D.tail(h), []).append(h)
    if any(len(v) > 1 for v in nxt.values()):
        raise SchemaError("cell set is pinched at a boundary vertex")
    outer = [min(bd)]
    while True:
        h = nxt[D.head(outer[-1])][0]
        if h == outer[0]:
            break
        outer.append(h)
        if len(outer) > len(bd):
            raise InvariantBreach("boundary walk did not close")
    if len(outer) != len(bd):
        raise SchemaError("cell set has more than one boundary component")
    return DiscDiagram(X, verts, edges, D.cells, outer, vmap, emap, orient=False, validate=check_disc)


def whole_complex(X: Complex2PE) -> DiscDiagram:
    """The identity diagram of a complex that is itself a disc."""
    return from_subcomplex(X, range(len(X.cells)))


def subdiagram(D: DiscDiagram, cell_ids: Iterable[str]) -> DiscDiagram:
    """Sub-diagram on a set of cells forming a disc (ids are diagram cell ids)."""
    keep = [D.cells[D.cidx[c]] for c in cell_ids]
    if not keep:
        raise SchemaError("empty subdiagram")
    cnt: dict[str, int] = {}
    for c in keep:
        for e in c.sides:
            cnt[e] = cnt.get(e, 0) + 1
    verts = [v for v in D.vertices if any(v in c.corners for c in keep)]
    edges = {e: D.edges[e] for e in D.edges if e in cnt}
    cells = [DCell(c.id, c.target, c.offset, list(c.corners), list(c.sides), c.flip) for c in keep]
    tmp = DiscDiagram(D.target, verts, edges, cells, [], D.vmap, D.emap, orient=False, validate=False)
    bd = [h for c in tmp.cells for h in c.walk(tmp) if cnt[h[0]] == 1]
    nxt: dict[str, list[HalfEdge]] = {}
    for h in bd:
        nxt.setdefault(tmp.tail(h), []).append(h)
    if not bd or any(len(v) > 1 for v in nxt.values()):
        raise SchemaError("subdiagram is not a disc")
    outer = [min(bd)]
    while True:
        h = nxt[tmp.head(outer[-1])][0]
        if h == outer[0]:
            break
        outer.append(h)
    if len(outer) != len(bd):
        raise SchemaError("subdiagram has more than one boundary component")
    vmap = {v: D.vmap[v] for v in verts}
    emap = {e: D.emap[e] for e in edges}
    return DiscDiagram(D.target, verts, edges, cells, outer, vmap, emap, orient=False)


# ----------------------------------------------------------------------------
# curvature


def vertex_curvature(D: DiscDiagram, v: str) -> float:
    try:
        return D.curvatures()[v]
    except KeyError:
        raise UnknownVertex(v) from None


def gauss_bonnet_residual(D: DiscDiagram) -> float:
    total = math.fsum(D.curvatures().values())
    return abs(total - TWO_PI * D.euler_characteristic())
