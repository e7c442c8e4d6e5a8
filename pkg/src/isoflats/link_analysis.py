"""Loops and diameters of metric graphs, and the link condition."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .complex_core import TWO_PI, Complex2PE, MetricGraph, vertex_link
from .errors import DisconnectedGraph


def shortest_essential_loop(G: MetricGraph) -> tuple[float, list[int]]:
    """Girth of a weighted multigraph: (length, edge indices of a witness cycle).

    Returns ``(inf, [])`` for forests.
    """
    adj = G.adjacency()
    best = math.inf
    witness: list[int] = []
    for k, (u, v, w, _) in enumerate(G.edges):
        if w >= best:
            continue
        iu, iv = G.index(u), G.index(v)
        if iu == iv:
            best, witness = w, [k]
            continue
        dist, prev = G.dijkstra(iu, skip_edge=k, adj=adj)
        cand = dist[iv] + w
        if cand < best:
            best = cand
            chain = []
            cur = iv
            while cur != iu:
                p, kk = prev[cur]
                chain.append(kk)
                cur = p
            witness = chain[::-1] + [k]
    return best, witness


@dataclass
class LinkVerdict:
    status: str
    worst_vertex: str | None
    loop_length: float
    loop: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_json(self) -> dict:
        L = self.loop_length
        return {
            "status": self.status,
            "worst_vertex": self.worst_vertex,
            "loop_length": L if math.isfinite(L) else None,
            "loop": [list(map(str, x)) for x in self.loop],
        }


def check_link_condition(X: Complex2PE, tol: float = 1e-9) -> LinkVerdict:
    """Pass iff every vertex link has no essential loop shorter than 2*pi - tol.

    The reported vertex is the one with the shortest loop overall, whether
    or not the verdict is a failure.
    """
    worst_v = None
    worst = math.inf
    worst_loop: list = []
    for v in X.vertices:
        G = vertex_link(X, v)
        L, cyc = shortest_essential_loop(G)
        if L < worst:
            worst, worst_v = L, v
            worst_loop = [G.edges[k][3] for k in cyc]
    status = "pass" if worst >= TWO_PI - tol else "fail"
    return LinkVerdict(status, worst_v, worst, worst_loop)


def all_pairs(G: MetricGraph) -> np.ndarray:
    adj = G.adjacency()
    n = len(G.nodes)
    D = np.empty((n, n))
    for i in range(n):
        D[i] = G.dijkstra(i, adj=adj)[0]
    return D


def _edge_pair_sup(D, e1, e2, same: bool) -> float:
    """Exact sup over x on e1, y on e2 of the graph distance d(x, y)."""
    a, b, l1 = e1
    c, d, l2 = e2
    # affine pieces c0 + cs*s + ct*t, with s measured from a and t from c
    funcs = [
        (D[a, c], 1.0, 1.0),
        (D[a, d] + l2, 1.0, -1.0),
        (D[b, c] + l1, -1.0, 1.0),
        (D[b, d] + l1 + l2, -1.0, -1.0),
    ]
    extra = [(0.0, 1.0, -1.0), (0.0, -1.0, 1.0)] if same else []

    def value(s, t):
        m = min(f0 + fs * s + ft * t for f0, fs, ft in funcs)
        if same:
            m = min(m, abs(s - t))
        return m

    allf = funcs + extra
    lines = []  # (A, B, C) meaning A*s + B*t = C
    for f, g in itertools.combinations(allf, 2):
        A, B, C = f[1] - g[1], f[2] - g[2], g[0] - f[0]
        if A != 0 or B != 0:
            lines.append((A, B, C))
    lines += [(1.0, 0.0, 0.0), (1.0, 0.0, l1), (0.0, 1.0, 0.0), (0.0, 1.0, l2)]
    pts = [(0.0, 0.0), (l1, 0.0), (0.0, l2), (l1, l2)]
    for (A1, B1, C1), (A2, B2, C2) in itertools.combinations(lines, 2):
        det = A1 * B2 - A2 * B1
        if det == 0:
            continue
        s = (C1 * B2 - C2 * B1) / det
        t = (A1 * C2 - A2 * C1) / det
        if -1e-12 <= s <= l1 + 1e-12 and -1e-12 <= t <= l2 + 1e-12:
            pts.append((min(max(s, 0.0), l1), min(max(t, 0.0), l2)))
    return max(value(s, t) for s, t in pts)


def link_diameter(G: MetricGraph) -> float:
    """Diameter of G as a metric space, interior points of edges included."""
    if not G.nodes:
        return 0.0
    D = all_pairs(G)
    if not np.all(np.isfinite(D)):
        raise DisconnectedGraph("metric graph is not connected")
    best = float(D.max())
    E = [(G.index(u), G.index(v), w) for u, v, w, _ in G.edges]
    for i in range(len(E)):
        for j in range(i, len(E)):
            best = max(best, _edge_pair_sup(D, E[i], E[j], i == j))
    return best
