"""Deterministic builders for example complexes and fixtures.

Every builder returns a validated :class:`Complex2PE` whose ``meta`` dict
records the kind, the parameters and any distinguished points, paths and
flat regions (as cell-id lists).
"""
from __future__ import annotations

import itertools
import math
from typing import Callable

import numpy as np

from ._davis import DavisBall, regular_polygon
from .complex_core import (
    Complex2PE,
    PLPath,
    clean_path,
    complex_from_parts,
    locate_in_cell,
    location_to_str,
    parse_location,
)
from .errors import BadParams

UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


class _Builder:
    def __init__(self):
        self.vertices: list[str] = []
        self._vset: set[str] = set()
        self.edges: dict[tuple[str, str], tuple[str, str, str, float]] = {}
        self.cells: list[tuple[str, list[str], np.ndarray, list[str]]] = []
        self.meta: dict = {}

    def vertex(self, v: str) -> str:
        if v not in self._vset:
            self._vset.add(v)
            self.vertices.append(v)
        return v

    def edge(self, u: str, v: str, length: float) -> str:
        a, b = (u, v) if u < v else (v, u)
        rec = self.edges.get((a, b))
        if rec is None:
            rec = (f"{a}|{b}", a, b, float(length))
            self.edges[(a, b)] = rec
        return rec[0]

    def cell(self, cid: str, corners: list[str], coords) -> None:
        xy = np.asarray(coords, dtype=float)
        area = 0.5 * sum(xy[i - 1, 0] * xy[i, 1] - xy[i, 0] * xy[i - 1, 1] for i in range(len(xy)))
        if area < 0:
            corners = corners[::-1]
            xy = xy[::-1].copy()
        n = len(corners)
        for v in corners:
            self.vertex(v)
        sides = [self.edge(corners[i], corners[(i + 1) % n], float(np.hypot(*(xy[(i + 1) % n] - xy[i])))) for i in range(n)]
        self.cells.append((cid, list(corners), xy, sides))

    def build(self, kind: str, params: dict) -> Complex2PE:
        meta = {"kind": kind, "params": params}
        meta.update(self.meta)
        return complex_from_parts(self.vertices, list(self.edges.values()), self.cells, meta)


# ----------------------------------------------------------------------------
# straight segments through global-coordinate square patches


def _straight_path(X: Complex2PE, pieces, cell_of: Callable[[int, int, int], str]) -> PLPath:
    """Path through unit-square sheets whose cell frames are global coordinates.

    ``pieces`` holds (sheet, P, Q) straight segments; ``cell_of`` maps a
    sheet and integer lower-left corner to a cell id.
    """
    pts = []
    cells = []
    for sheet, P, Q in pieces:
        P = np.asarray(P, float)
        Q = np.asarray(Q, float)
        d = Q - P
        ts = {0.0, 1.0}
        for ax in range(2):
            if d[ax] != 0:
                lo, hi = sorted((P[ax], Q[ax]))
                for g in range(math.ceil(lo), math.floor(hi) + 1):
                    t = (g - P[ax]) / d[ax]
                    if 0 < t < 1:
                        ts.add(t)
        ts = sorted(ts)
        for t0, t1 in zip(ts, ts[1:]):
            if t1 - t0 < 1e-14:
                continue
            mid = P + 0.5 * (t0 + t1) * d
            ci = X.cidx[cell_of(sheet, math.floor(mid[0]), math.floor(mid[1]))]
            a = locate_in_cell(X, ci, P + t0 * d)
            b = locate_in_cell(X, ci, P + t1 * d)
            if not pts:
                pts.append(a)
            pts.append(b)
            cells.append(ci)
    return clean_path(PLPath(X, pts, cells))


def path_to_meta(P: PLPath) -> dict:
    return {"breakpoints": [location_to_str(p) for p in P.points], "cells": P.cell_ids()}


def meta_path(X: Complex2PE, name: str) -> PLPath:
    rec = X.meta["paths"][name]
    return PLPath(X, [parse_location(s) for s in rec["breakpoints"]], [X.cidx[c] for c in rec["cells"]])


def meta_point(X: Complex2PE, name: str):
    return parse_location(X.meta["points"][name])


# ----------------------------------------------------------------------------
# flat patches


def grid(n: int, m: int | None = None) -> Complex2PE:
    """n x m block of unit squares with global coordinates; ids v{x}_{y}, c{x}_{y}."""
    m = n if m is None else m
    if n < 1 or m < 1:
        raise BadParams("grid needs n, m >= 1")
    B = _Builder()
    for y in range(m):
        for x in range(n):
            B.cell(f"c{x}_{y}", [f"v{x}_{y}", f"v{x+1}_{y}", f"v{x+1}_{y+1}", f"v{x}_{y+1}"], UNIT_SQUARE + [x, y])
    B.meta["flats"] = {"grid": [c[0] for c in B.cells]}
    return B.build("grid", {"n": n} if m == n else {"n": n, "m": m})


def hex_patch(n: int) -> Complex2PE:
    """Unit regular hexagons whose centers lie within hex distance n of the origin."""
    if n < 0:
        raise BadParams("hex radius must be >= 0")
    B = _Builder()
    names: dict[tuple[int, int], str] = {}
    hexes = [(q, r) for r in range(-n, n + 1) for q in range(-n, n + 1) if abs(q) <= n and abs(r) <= n and abs(q + r) <= n]
    for q, r in hexes:
        cx, cy = math.sqrt(3) * (q + r / 2), 1.5 * r
        corners, coords = [], []
        for k in range(6):
            ang = math.pi / 6 + k * math.pi / 3
            x, y = cx + math.cos(ang), cy + math.sin(ang)
            key = (round(x * 1e6), round(y * 1e6))
            if key not in names:
                names[key] = f"h{len(names)}"
            corners.append(names[key])
            coords.append((x, y))
        B.cell(f"x{q}_{r}", corners, coords)
    B.meta["flats"] = {"hex": [c[0] for c in B.cells]}
    B.meta["points"] = {"center": f"c:x0_0:0.0,0.0"}
    return B.build("hex", {"n": n})


# ----------------------------------------------------------------------------
# Davis complexes


def _davis_complex(ball: DavisBall, kind: str, params: dict) -> Complex2PE:
    B = _Builder()
    for cid, corners, m in ball.cells:
        B.cell(cid, corners, regular_polygon(2 * m))
    B.meta["points"] = {"apex": "v:v0"}
    return B.build(kind, params)


def cone(k: int, n: int) -> Complex2PE:
    """Ball of n cell layers in the square complex with k squares at every vertex.

    This is the Davis complex of the right-angled Coxeter group whose
    defining graph is a k-cycle; the apex is the identity vertex ``v0``.
    """
    if k < 3 or n < 1:
        raise BadParams("cone needs k >= 3 and n >= 1")
    labels = {(i, (i + 1) % k): 2 for i in range(k)}
    return _davis_complex(DavisBall(k, labels, n), "cone", {"k": k, "n": n})


def _parse_graph(L) -> tuple[int, list[tuple[int, int]]]:
    if isinstance(L, str):
        s = L.strip().lower()
        for pre in ("cycle", "complete"):
            if s.startswith(pre):
                try:
                    k = int(s[len(pre):])
                except ValueError as exc:
                    raise BadParams(f"bad graph spec {L!r}") from exc
                if pre == "cycle":
                    if k < 2:
                        raise BadParams("cycle needs at least 2 vertices")
                    return k, [(i, (i + 1) % k) for i in range(k)]
                return k, list(itertools.combinations(range(k), 2))
        if s == "petersen":
            outer = [(i, (i + 1) % 5) for i in range(5)]
            spokes = [(i, i + 5) for i in range(5)]
            inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
            return 10, outer + spokes + inner
        raise BadParams(f"unknown graph spec {L!r}")
    edges = [tuple(e) for e in L]
    k = 1 + max(max(e) for e in edges)
    return k, edges


def girth(k: int, edges: list[tuple[int, int]]) -> float:
    """Combinatorial girth of a multigraph given by an edge list."""
    best = math.inf
    for idx, (u, v) in enumerate(edges):
        if u == v:
            return 1
        adj: dict[int, list[int]] = {}
        for j, (a, b) in enumerate(edges):
            if j != idx:
                adj.setdefault(a, []).append(b)
                adj.setdefault(b, []).append(a)
        dist = {u: 0}
        frontier = [u]
        while frontier and v not in dist:
            nxt = []
            for x in frontier:
                for y in adj.get(x, []):
                    if y not in dist:
                        dist[y] = dist[x] + 1
                        nxt.append(y)
            frontier = nxt
        if v in dist:
            best = min(best, dist[v] + 1)
    return best


def moussong_ball(L, r: int) -> Complex2PE:
    """Ball of r cell layers in a regular-hexagon complex whose vertex links are L."""
    k, edges = _parse_graph(L)
    if r < 1:
        raise BadParams("radius must be >= 1")
    if girth(k, edges) < 3:
        raise BadParams("link graph must be simple with girth >= 3")
    used = {x for e in edges for x in e}
    if used != set(range(k)):
        raise BadParams("link graph must not have isolated vertices")
    labels = {tuple(sorted(e)): 3 for e in edges}
    X = _davis_complex(DavisBall(k, labels, r), "moussong_ball", {"L": L if isinstance(L, str) else [list(e) for e in edges], "r": r})
    X.meta["link_graph"] = {"k": k, "edges": [list(e) for e in edges]}
    return X


# ----------------------------------------------------------------------------
# triplanes


def _triplane_builder(W: int, H: int) -> _Builder:
    B = _Builder()

    def vid(i, x, y):
        return f"s{x}" if y == 0 else f"t{i}_{x}_{y}"

    for i in (1, 2, 3):
        for y in range(H):
            for x in range(-W, W):
                B.cell(
                    f"q{i}_{x}_{y}",
                    [vid(i, x, y), vid(i, x + 1, y), vid(i, x + 1, y + 1), vid(i, x, y + 1)],
                    UNIT_SQUARE + [x, y],
                )
    B.meta["flats"] = {f"sheet{i}": [f"q{i}_{x}_{y}" for y in range(H) for x in range(-W, W)] for i in (1, 2, 3)}
    B.meta["singular"] = [f"s{x}" for x in range(-W, W + 1)]
    return B


def _triplane_cell(i, x, y):
    return f"q{i}_{x}_{y}"


def triplane(R: int) -> Complex2PE:
    """Three [-R, R] x [0, R] square sheets glued along their bottom sides.

    A sheet point with global coordinates (x, y) on sheet i is the cell
    frame point (x, y) of cell ``q{i}_{floor x}_{floor y}``.
    """
    if R < 1:
        raise BadParams("triplane needs R >= 1")
    B = _triplane_builder(R, R)
    B.meta["points"] = {"origin": "v:s0"}
    X = B.build("triplane", {"R": R})
    seg = _straight_path(X, [(1, (-R, 0), (R, 0))], _triplane_cell)
    X.meta["paths"] = {"singular": path_to_meta(seg)}
    return X


def delta_n(n: int) -> Complex2PE:
    """Triplane patch carrying the triangle a=(0,n,1), b=(-2n,n,2), c=(2n,n,3).

    Each side unfolds to a straight segment across the singular line:
    [b,a] crosses at x=-n, [a,c] at x=n and [b,c] at x=0.
    """
    if n < 1:
        raise BadParams("delta_n needs n >= 1")
    W, H = 2 * n + 1, n + 1
    B = _triplane_builder(W, H)
    pa, pb, pc = (0, n), (-2 * n, n), (2 * n, n)
    B.meta["points"] = {
        "a": f"v:t1_0_{n}",
        "b": f"v:t2_{-2 * n}_{n}",
        "c": f"v:t3_{2 * n}_{n}",
    }
    X = B.build("delta_n", {"n": n})
    ba = _straight_path(X, [(2, pb, (-n, 0)), (1, (-n, 0), pa)], _triplane_cell)
    ac = _straight_path(X, [(1, pa, (n, 0)), (3, (n, 0), pc)], _triplane_cell)
    bc = _straight_path(X, [(2, pb, (0, 0)), (3, (0, 0), pc)], _triplane_cell)
    X.meta["paths"] = {"ba": path_to_meta(ba), "ac": path_to_meta(ac), "bc": path_to_meta(bc)}
    return X


# ----------------------------------------------------------------------------
# square complexes grown in layers


class _SquareComplex:
    """Combinatorial unit-square complex with per-vertex square counts."""

    def __init__(self):
        self.squares: list[tuple[str, list[str]]] = []
        self.count: dict[str, int] = {}
        self._fresh = 0

    def add(self, cid: str, corners: list[str]) -> None:
        self.squares.append((cid, corners))
        for v in corners:
            self.count[v] = self.count.get(v, 0) + 1

    def fresh(self, prefix: str) -> str:
        self._fresh += 1
        return f"{prefix}{self._fresh}"

    def grow(self, arc: list[str], q: int, prefix: str) -> list[str]:
        """Attach one layer of squares along ``arc``, raising interior arc
        vertices to q squares; returns the new outer arc."""
        k = len(arc) - 1
        spokes: list[list[str]] = []
        for i, p in enumerate(arc):
            if i in (0, k):
                s = 1
            else:
                d = q - self.count.get(p, 0)
                if d < 2:
                    raise BadParams(f"vertex {p} already has {self.count.get(p, 0)} squares (q={q})")
                s = d - 1
            spokes.append([self.fresh(prefix) for _ in range(s)])
        new_arc = [spokes[0][-1]]
        for i in range(k):
            self.add(self.fresh(prefix + "E"), [arc[i], arc[i + 1], spokes[i + 1][0], spokes[i][-1]])
        for i in range(1, k):
            zs = spokes[i]
            for j in range(len(zs) - 1):
                w = self.fresh(prefix)
                self.add(self.fresh(prefix + "W"), [arc[i], zs[j], w, zs[j + 1]])
                new_arc.extend([zs[j], w])
            new_arc.append(zs[-1])
        new_arc.append(spokes[k][0])
        return new_arc

    def builder(self) -> _Builder:
        B = _Builder()
        for cid, corners in self.squares:
            B.cell(cid, corners, UNIT_SQUARE)
        return B


def _grid_into(S: _SquareComplex, n: int, m: int, prefix: str, rename=None):
    rename = rename or {}

    def vid(x, y):
        v = f"{prefix}{x}_{y}"
        return rename.get(v, v)

    for y in range(m):
        for x in range(n):
            S.add(f"{prefix}c{x}_{y}", [vid(x, y), vid(x + 1, y), vid(x + 1, y + 1), vid(x, y + 1)])
    return vid


def hyperbolic_strip(N: int, m: int, q: int = 5) -> Complex2PE:
    """A row of N squares with m layers of q-valent growth on both long sides.

    The bottom side of the row is a geodesic of length N (path ``gamma``).
    """
    if N < 1 or m < 0 or q < 4:
        raise BadParams("hyperbolic_strip needs N >= 1, m >= 0, q >= 4")
    S = _SquareComplex()
    vid = _grid_into(S, N, 1, "r")
    top = [vid(x, 1) for x in range(N + 1)]
    bot = [vid(x, 0) for x in range(N + 1)]
    for _ in range(m):
        top = S.grow(top, q, "u")
    for _ in range(m):
        bot = S.grow(bot, q, "d")
    B = S.builder()
    B.meta["points"] = {"start": f"v:{vid(0, 0)}", "end": f"v:{vid(N, 0)}"}
    X = B.build("hyperbolic_strip", {"N": N, "m": m, "q": q})
    X.meta["paths"] = {"gamma": _vertex_path_meta(X, [vid(x, 0) for x in range(N + 1)])}
    return X


def half_strip(N: int, m: int, q: int = 5) -> Complex2PE:
    """A row of N squares with m layers of growth on its top side only.

    The bottom side (``gamma``) is a boundary geodesic; every other boundary
    point lies on the grown side.
    """
    if N < 1 or m < 0 or q < 4:
        raise BadParams("half_strip needs N >= 1, m >= 0, q >= 4")
    S = _SquareComplex()
    vid = _grid_into(S, N, 1, "r")
    top = [vid(x, 1) for x in range(N + 1)]
    for _ in range(m):
        top = S.grow(top, q, "u")
    B = S.builder()
    B.meta["points"] = {"start": f"v:{vid(0, 0)}", "end": f"v:{vid(N, 0)}"}
    X = B.build("half_strip", {"N": N, "m": m, "q": q})
    X.meta["paths"] = {"gamma": _vertex_path_meta(X, [vid(x, 0) for x in range(N + 1)])}
    return X


def flap_grid(n: int, m: int, q: int = 5) -> Complex2PE:
    """Flat n x n grid A, m layers of q-valent flap on its top side, and a
    second flat n x n grid B glued along one edge to the middle of the flap's
    outer side.  ``meta['flats']`` names both grids."""
    if n < 1 or m < 1:
        raise BadParams("flap_grid needs n, m >= 1")
    S = _SquareComplex()
    vid = _grid_into(S, n, n, "a")
    arc = [vid(x, n) for x in range(n + 1)]
    for _ in range(m):
        arc = S.grow(arc, q, "f")
    j = len(arc) // 2 - 1
    k = n // 2
    rename = {f"b{k}_0": arc[j], f"b{k + 1}_0": arc[j + 1]}
    _grid_into(S, n, n, "b", rename)
    B = S.builder()
    B.meta["flats"] = {
        "A": [f"ac{x}_{y}" for y in range(n) for x in range(n)],
        "B": [f"bc{x}_{y}" for y in range(n) for x in range(n)],
    }
    B.meta["points"] = {"a_center": f"v:a{n // 2}_{n // 2}", "b_center": f"v:{rename.get(f'b{n // 2}_{n // 2}', f'b{n // 2}_{n // 2}')}"}
    return B.build("flap_grid", {"n": n, "m": m, "q": q})


def cone_point(k: int, n: int) -> Complex2PE:
    """k quadrants, each an n x n block of unit squares, around one apex ``o``."""
    if k < 2 or n < 1:
        raise BadParams("cone_point needs k >= 2, n >= 1")
    S = _SquareComplex()
    for i in range(k):
        # quadrant i has its x-axis shared with quadrant i-1's y-axis
        def vid(x, y, i=i):
            if x == 0 and y == 0:
                return "o"
            if y == 0:
                return f"r{i}_{x}"
            if x == 0:
                return f"r{(i + 1) % k}_{y}"
            return f"p{i}_{x}_{y}"

        for y in range(n):
            for x in range(n):
                S.add(f"k{i}_{x}_{y}", [vid(x, y), vid(x + 1, y), vid(x + 1, y + 1), vid(x, y + 1)])
    B = S.builder()
    B.meta["points"] = {"apex": "v:o"}
    return B.build("cone_point", {"k": k, "n": n})


def wedge_strip(N: int, H: int, spacing: int = 5) -> Complex2PE:
    """Row of N squares under a flat N x H block, with an H x H wedge
    inserted above every ``spacing``-th vertex of the row's top side.

    Each wedge corner carries five squares (curvature -pi/2); every other
    interior vertex is flat.  The bottom side (``gamma``) is a boundary
    geodesic, and points far above it are far from the rest of the boundary.
    """
    if N < 2 or H < 1 or spacing < 1:
        raise BadParams("wedge_strip needs N >= 2, H >= 1, spacing >= 1")
    S = _SquareComplex()
    cuts = list(range(spacing // 2 or 1, N, spacing))
    for x in range(N):
        S.add(f"b{x}", [f"b{x}_0", f"b{x + 1}_0", f"b{x + 1}_1", f"b{x}_1"])
    bounds = [0] + cuts + [N]
    for j in range(len(bounds) - 1):
        x0, x1 = bounds[j], bounds[j + 1]

        def vid(x, y, j=j, x0=x0, x1=x1):
            if y == 1:
                return f"b{x}_1"
            if x == x0 and j > 0:
                return f"L{j}_{y}"
            if x == x1 and j < len(bounds) - 2:
                return f"R{j}_{y}"
            return f"a{j}_{x}_{y}"

        for y in range(1, H + 1):
            for x in range(x0, x1):
                S.add(f"a{j}_{x}_{y}", [vid(x, y), vid(x + 1, y), vid(x + 1, y + 1), vid(x, y + 1)])
    for j, d in enumerate(cuts, start=1):
        # wedge j: one ray glued to the block on its left, the other to the block on its right
        def wid(u, v, j=j, d=d):
            if u == 0 and v == 0:
                return f"b{d}_1"
            if v == 0:
                return f"R{j - 1}_{1 + u}"
            if u == 0:
                return f"L{j}_{1 + v}"
            return f"w{j}_{u}_{v}"

        for v in range(H):
            for u in range(H):
                S.add(f"w{j}_{u}_{v}", [wid(u, v), wid(u + 1, v), wid(u + 1, v + 1), wid(u, v + 1)])
    B = S.builder()
    B.meta["points"] = {"start": "v:b0_0", "end": f"v:b{N}_0"}
    X = B.build("wedge_strip", {"N": N, "H": H, "spacing": spacing})
    X.meta["paths"] = {"gamma": _vertex_path_meta(X, [f"b{x}_0" for x in range(N + 1)])}
    return X


def _vertex_path_meta(X: Complex2PE, verts: list[str]) -> dict:
    from .complex_core import AtVertex

    pts = [AtVertex(v) for v in verts]
    return path_to_meta(PLPath(X, pts))


KINDS = {
    "grid": grid,
    "hex": hex_patch,
    "cone": cone,
    "triplane": triplane,
    "delta_n": delta_n,
    "moussong_ball": moussong_ball,
    "flap_grid": flap_grid,
    "hyperbolic_strip": hyperbolic_strip,
    "half_strip": half_strip,
    "cone_point": cone_point,
    "wedge_strip": wedge_strip,
}


def generate(kind: str, **params) -> Complex2PE:
    try:
        fn = KINDS[kind]
    except KeyError:
        raise BadParams(f"unknown kind {kind!r}; choose from {sorted(KINDS)}") from None
    try:
        return fn(**params)
    except TypeError as exc:
        raise BadParams(str(exc)) from exc
