"""Finite balls in Davis complexes of 2-dimensional Coxeter groups.

Group elements are stored as integer matrices of the Tits representation.
With every label in {2, 3, inf} twice the bilinear form is integral, so
elements can be hashed exactly.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import BadParams


def _cartan(k: int, labels: dict[tuple[int, int], int]) -> np.ndarray:
    # c[s, j] = 2 B(e_s, e_j)
    c = np.full((k, k), -2, dtype=np.int64)
    np.fill_diagonal(c, 2)
    for (s, t), m in labels.items():
        if m == 2:
            v = 0
        elif m == 3:
            v = -1
        else:
            raise BadParams(f"label {m} not supported (use 2 or 3)")
        c[s, t] = c[t, s] = v
    return c


def regular_polygon(n: int) -> np.ndarray:
    """Unit-side regular n-gon, counterclockwise, first side along the x-axis."""
    pts = [np.zeros(2)]
    for i in range(n - 1):
        ang = 2 * math.pi * i / n
        pts.append(pts[-1] + np.array([math.cos(ang), math.sin(ang)]))
    return np.array(pts)


class DavisBall:
    """Cell-layer ball about the identity in the Davis complex of (W, S)."""

    def __init__(self, k: int, labels: dict[tuple[int, int], int], radius: int):
        if radius < 1:
            raise BadParams("radius must be at least 1")
        self.k = k
        self.labels = {tuple(sorted(p)): m for p, m in labels.items()}
        self.c = _cartan(k, self.labels)
        self.vertex_id: dict[bytes, str] = {}
        self.order: list[str] = []
        self.cells: list[tuple[str, list[str], int]] = []  # (id, corners, m)
        self._seen_cosets: set[frozenset] = set()
        ident = np.eye(k, dtype=np.int64)
        self._name(ident)
        frontier = [ident]
        for _ in range(radius):
            new_vertices = []
            for w in frontier:
                for (s, t), m in sorted(self.labels.items()):
                    elems = self._coset(w, s, t, m)
                    key = frozenset(e.tobytes() for e in elems)
                    if key in self._seen_cosets:
                        continue
                    self._seen_cosets.add(key)
                    corners = []
                    for e in elems:
                        b = e.tobytes()
                        if b not in self.vertex_id:
                            self._name(e)
                            new_vertices.append(e)
                        corners.append(self.vertex_id[b])
                    self.cells.append((f"f{len(self.cells)}", corners, m))
            frontier = new_vertices

    def _name(self, w: np.ndarray) -> str:
        name = f"v{len(self.order)}"
        self.vertex_id[w.tobytes()] = name
        self.order.append(name)
        return name

    def mult(self, w: np.ndarray, s: int) -> np.ndarray:
        # right multiplication by the reflection s
        out = w - np.outer(w[:, s], self.c[s])
        return out

    def _coset(self, w, s, t, m):
        elems = [w]
        cur = w
        for i in range(2 * m - 1):
            cur = self.mult(cur, s if i % 2 == 0 else t)
            elems.append(cur)
        return elems
