"""Filling closed edge loops by disc diagrams.

The search works on the boundary words of the still-unfilled regions.  A
move either attaches a target cell along the first letter of the shortest
region, or identifies that letter with an inverse letter further along
(splitting the region in two).  Adjacent inverse letters are always folded
together, which never costs area.  Iterative deepening on the number of
cells, with failed states memoized per budget, finds a filling of least
area, and such a filling is reduced.

A found move sequence is replayed on an explicit planar structure, where
folds and bridges become vertex and edge identifications.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..complex_core import Complex2PE
from ..errors import BadParams, Exceeded, NotClosed, SchemaError
from .model import DCell, DiscDiagram, from_subcomplex

Letter = int  # 2 * edge index + (0 forward, 1 backward)


def letter(X: Complex2PE, eid: str, sign: int) -> Letter:
    return 2 * X.eidx[eid] + (0 if sign > 0 else 1)


def letter_edge(X: Complex2PE, a: Letter) -> tuple[str, int]:
    return X.edges[a >> 1].id, (1 if a & 1 == 0 else -1)


def letter_tail(X: Complex2PE, a: Letter) -> str:
    e = X.edges[a >> 1]
    return e.v0 if a & 1 == 0 else e.v1


def letter_head(X: Complex2PE, a: Letter) -> str:
    e = X.edges[a >> 1]
    return e.v1 if a & 1 == 0 else e.v0


def parse_loop(X: Complex2PE, loop) -> list[Letter]:
    """A loop is a vertex sequence (first == last) or a list of (edge id, sign)."""
    loop = list(loop)
    if not loop:
        raise NotClosed("empty loop")
    if isinstance(loop[0], (tuple, list)):
        word = [letter(X, e, s) for e, s in loop]
    elif isinstance(loop[0], str) and (loop[0] in X.vidx):
        if loop[0] != loop[-1]:
            raise NotClosed("vertex loop must end where it starts")
        word = []
        for u, v in zip(loop, loop[1:]):
            eid = X.edge_between(u, v)
            if eid is None:
                raise NotClosed(f"no edge joins {u} and {v}")
            word.append(letter(X, eid, 1 if X.edge(eid).v0 == u else -1))
    else:
        word = []
        for s in loop:
            sign = -1 if s.startswith("-") else 1
            eid = s[1:] if sign < 0 else s
            if eid not in X.eidx:
                raise SchemaError(f"unknown edge {eid}")
            word.append(letter(X, eid, sign))
    for i, a in enumerate(word):
        if letter_head(X, a) != letter_tail(X, word[(i + 1) % len(word)]):
            raise NotClosed(f"loop breaks after letter {i}")
    return word


# ----------------------------------------------------------------------------
# region state shared by search and replay

Item = tuple  # (letter, payload)


def _fold(reg: list[Item]) -> tuple[list[Item], list[tuple[Item, Item]]]:
    pairs = []
    out: list[Item] = []
    for x in reg:
        if out and out[-1][0] == x[0] ^ 1:
            pairs.append((out.pop(), x))
        else:
            out.append(x)
    while len(out) >= 2 and out[0][0] == out[-1][0] ^ 1:
        a = out.pop()
        b = out.pop(0)
        pairs.append((a, b))
    return out, pairs


def _cell_replacement(X: Complex2PE, ci: int, a: Letter) -> tuple[int, bool, list[tuple[int, bool]]]:
    """Attach cell ci along letter a: (side index j, flip, [(side k, ccw?)] replacing a)."""
    c = X.cells[ci]
    eid, s = letter_edge(X, a)
    if eid not in c.sides:
        raise BadParams(f"cell {c.id} does not contain edge {eid}")
    j = c.sides.index(eid)
    n = c.size
    if s == c.signs[j]:
        # the letter runs counterclockwise around the cell
        return j, False, [((j - t) % n, False) for t in range(1, n)]
    return j, True, [((j + t) % n, True) for t in range(1, n)]


def _side_letter(X: Complex2PE, ci: int, k: int, ccw: bool) -> Letter:
    c = X.cells[ci]
    s = c.signs[k] if ccw else -c.signs[k]
    return letter(X, c.sides[k], s)


class _UF:
    def __init__(self):
        self.p: list[int] = []

    def add(self) -> int:
        self.p.append(len(self.p))
        return len(self.p) - 1

    def find(self, x: int) -> int:
        while self.p[x] != x:
            self.p[x] = self.p[self.p[x]]
            x = self.p[x]
        return x

    def union(self, a: int, b: int) -> None:
        a, b = self.find(a), self.find(b)
        if a != b:
            if b < a:
                a, b = b, a
            self.p[b] = a


@dataclass
class _Replay:
    X: Complex2PE
    vuf: _UF = field(default_factory=_UF)
    euf: _UF = field(default_factory=_UF)
    vt: list[str] = field(default_factory=list)  # target vertex per diagram vertex
    ends: list[tuple[int, int]] = field(default_factory=list)  # endpoints per diagram edge
    et: list[int] = field(default_factory=list)  # target edge per diagram edge
    cells: list[tuple[int, list[int], list[int], bool]] = field(default_factory=list)

    def vertex(self, tv: str) -> int:
        self.vt.append(tv)
        return self.vuf.add()

    def edge(self, u: int, v: int, te: int) -> int:
        self.ends.append((u, v))
        self.et.append(te)
        return self.euf.add()

    # half-edge payload: (edge, dir) with dir +1 meaning ends[0] -> ends[1]
    def tail(self, h):
        e, d = h
        return self.ends[e][0] if d > 0 else self.ends[e][1]

    def head(self, h):
        e, d = h
        return self.ends[e][1] if d > 0 else self.ends[e][0]

    def identify_inverse(self, a, b) -> None:
        """Glue half-edge b onto the reverse of half-edge a."""
        self.vuf.union(self.head(a), self.tail(b))
        self.vuf.union(self.tail(a), self.head(b))
        self.euf.union(a[0], b[0])


class _State:
    def __init__(self, X: Complex2PE, regions: list[list[Item]], replay: _Replay | None):
        self.X = X
        self.regions = regions
        self.rp = replay

    def normalize(self) -> None:
        out = []
        for r in self.regions:
            r2, pairs = _fold(r)
            if self.rp is not None:
                for a, b in pairs:
                    self.rp.identify_inverse(a[1], b[1])
            if r2:
                out.append(r2)
        self.regions = out

    def pick(self) -> int:
        return min(range(len(self.regions)), key=lambda i: (len(self.regions[i]), i))

    def attach(self, ri: int, ci: int) -> None:
        X = self.X
        reg = self.regions[ri]
        a, pay = reg[0]
        j, flip, repl = _cell_replacement(X, ci, a)
        items = [(_side_letter(X, ci, k, ccw), None) for k, ccw in repl]
        if self.rp is not None:
            rp = self.rp
            c = X.cells[ci]
            n = c.size
            corner: dict[int, int] = {}
            # the glued half-edge fixes two corners
            if not flip:
                corner[j], corner[(j + 1) % n] = rp.tail(pay), rp.head(pay)
            else:
                corner[(j + 1) % n], corner[j] = rp.tail(pay), rp.head(pay)
            for i in range(n):
                if i not in corner:
                    corner[i] = rp.vertex(c.corners[i])
            sides = {j: pay[0]}
            for k in range(n):
                if k != j:
                    sides[k] = rp.edge(corner[k], corner[(k + 1) % n], X.eidx[c.sides[k]])
            # the glued edge keeps its own orientation; record corner order only
            rp.cells.append((ci, [corner[i] for i in range(n)], [sides[i] for i in range(n)], flip))
            items = []
            for k, ccw in repl:
                h = (sides[k], 1 if ccw else -1)
                items.append((_side_letter(X, ci, k, ccw), h))
        self.regions[ri] = items + reg[1:]
        self.normalize()

    def bridge(self, ri: int, j: int) -> None:
        reg = self.regions[ri]
        a, b = reg[0], reg[j]
        if self.rp is not None:
            self.rp.identify_inverse(a[1], b[1])
        r1 = reg[1:j]
        r2 = reg[j + 1:]
        self.regions = self.regions[:ri] + [r for r in (r1, r2) if r] + self.regions[ri + 1:]
        self.normalize()

    def key(self):
        keys = []
        for r in self.regions:
            w = [x[0] for x in r]
            n = len(w)
            best = min(tuple(w[i:] + w[:i]) for i in range(n))
            keys.append(best)
        return tuple(sorted(keys))

    def copy(self) -> "_State":
        return _State(self.X, [list(r) for r in self.regions], None)


# ----------------------------------------------------------------------------
# search


@dataclass
class FillResult:
    moves: list
    cells: int


def _search(X: Complex2PE, word: list[Letter], max_cells: int, allow_bridges: bool = True):
    pmax = max(c.size for c in X.cells)
    cells_of_edge = [sorted(ci for ci, _ in X.edge_cells[k]) for k in range(len(X.edges))]
    failed: dict = {}
    nodes = [0]
    node_cap = 2_000_000

    def lower_bound(st: _State) -> int:
        total = sum(len(r) for r in st.regions)
        if not allow_bridges:
            return math.ceil(total / pmax)
        # bridges remove two letters for free, but only between inverse letters
        free = 0
        for r in st.regions:
            cnt: dict[int, int] = {}
            for a, _ in r:
                cnt[a] = cnt.get(a, 0) + 1
            free += sum(min(cnt.get(a, 0), cnt.get(a ^ 1, 0)) for a in cnt if a & 1 == 0)
        return math.ceil(max(0, total - 2 * free) / pmax)

    def rec(st: _State, budget: int):
        nodes[0] += 1
        if nodes[0] > node_cap:
            raise Exceeded("search node limit reached", bound=max_cells)
        if not st.regions:
            return []
        if lower_bound(st) > budget:
            return None
        k = st.key()
        if failed.get(k, -1) >= budget:
            return None
        ri = st.pick()
        a = st.regions[ri][0][0]
        if budget > 0:
            for ci in cells_of_edge[a >> 1]:
                nst = st.copy()
                nst.attach(ri, ci)
                res = rec(nst, budget - 1)
                if res is not None:
                    return [("attach", ri, ci)] + res
        if allow_bridges:
            reg = st.regions[ri]
            for j in range(2, len(reg) - 1):
                if reg[j][0] == a ^ 1:
                    nst = st.copy()
                    nst.bridge(ri, j)
                    res = rec(nst, budget)
                    if res is not None:
                        return [("bridge", ri, j)] + res
        failed[k] = budget
        return None

    st0 = _State(X, [[(a, None) for a in word]], None)
    st0.normalize()
    for budget in range(lower_bound(st0), max_cells + 1):
        res = rec(st0.copy(), budget)
        if res is not None:
            return res
    return None


def replay(X: Complex2PE, word: list[Letter], moves) -> DiscDiagram:
    rp = _Replay(X)
    n = len(word)
    pv = [rp.vertex(letter_tail(X, a)) for a in word]
    outer = []
    for i, a in enumerate(word):
        e = rp.edge(pv[i], pv[(i + 1) % n], a >> 1)
        outer.append((e, 1))
    st = _State(X, [[(a, h) for a, h in zip(word, outer)]], rp)
    st.normalize()
    for mv in moves:
        if mv[0] == "attach":
            st.attach(mv[1], mv[2])
        else:
            st.bridge(mv[1], mv[2])
    if st.regions:
        raise SchemaError("move sequence does not fill the loop")
    return _finish(X, rp, outer)


def _finish(X: Complex2PE, rp: _Replay, outer) -> DiscDiagram:
    vf, ef = rp.vuf.find, rp.euf.find
    vname: dict[int, str] = {}
    ename: dict[int, str] = {}

    def vn(v):
        r = vf(v)
        if r not in vname:
            vname[r] = f"d{len(vname)}"
        return vname[r]

    edges: dict[str, tuple[str, str]] = {}
    emap: dict[str, str] = {}
    vmap: dict[str, str] = {}

    def en(e):
        r = ef(e)
        if r not in ename:
            ename[r] = f"de{len(ename)}"
            u, v = rp.ends[r]
            edges[ename[r]] = (vn(u), vn(v))
            emap[ename[r]] = X.edges[rp.et[r]].id
        return ename[r]

    out_walk = []
    for e, d in outer:
        name = en(e)
        u, v = rp.ends[e]
        a, b = (vn(u), vn(v)) if d > 0 else (vn(v), vn(u))
        eu, ev = edges[name]
        if eu == ev:
            raise SchemaError("filling produced a loop edge")
        out_walk.append((name, 1 if (a, b) == (eu, ev) else -1))
    cells = []
    for k, (ci, corners, sides, flip) in enumerate(rp.cells):
        cells.append(DCell(f"dc{k}", ci, 0, [vn(v) for v in corners], [en(e) for e in sides], flip))
    verts = list(dict.fromkeys(list(vname.values())))
    for v, name in vname.items():
        vmap[name] = rp.vt[v]
    for r, name in vname.items():
        pass
    # every diagram vertex class maps to a single target vertex
    for v in range(len(rp.vt)):
        if rp.vt[v] != vmap[vn(v)]:
            raise SchemaError("identification mixes target vertices")
    if not verts:
        verts = []
    return DiscDiagram(X, verts, edges, cells, out_walk, vmap, emap, orient=False)


def _mirror_to(D: DiscDiagram, word_edges: list[tuple[str, int]]) -> DiscDiagram:
    """Rebase the outer walk of an embedded-subcomplex diagram to start and run like the loop."""
    n = len(word_edges)
    outer = D.outer
    for rev in (False, True):
        walk = [(e, -s) for e, s in reversed(outer)] if rev else list(outer)
        for shift in range(n):
            cand = walk[shift:] + walk[:shift]
            if [(e, s) for e, s in cand] == word_edges:
                cells = [DCell(c.id, c.target, c.offset, c.corners, c.sides, (not c.flip) if rev else c.flip) for c in D.cells]
                return DiscDiagram(D.target, D.vertices, D.edges, cells, cand, D.vmap, D.emap, orient=False)
    raise SchemaError("boundary does not match the loop")


def _flood_fill(X: Complex2PE, word: list[Letter], max_cells: int) -> DiscDiagram | None:
    """Fast path: a simple loop in a surface part of X bounding a disc of cells."""
    verts = [letter_tail(X, a) for a in word]
    if len(set(verts)) != len(verts) or len(word) < 3:
        return None
    loop_edges = {a >> 1 for a in word}
    if len(loop_edges) != len(word):
        return None
    best = None
    e0 = word[0] >> 1
    for start, _ in X.edge_cells[e0]:
        seen = {start}
        stack = [start]
        ok = True
        while stack and ok:
            ci = stack.pop()
            for eid in X.cells[ci].sides:
                ei = X.eidx[eid]
                if ei in loop_edges:
                    continue
                nb = X.edge_cells[ei]
                if len(nb) > 2:
                    ok = False
                    break
                for cj, _ in nb:
                    if cj not in seen:
                        seen.add(cj)
                        stack.append(cj)
            if len(seen) > max_cells:
                ok = False
        if not ok:
            continue
        try:
            D = from_subcomplex(X, seen)
            D = _mirror_to(D, [letter_edge(X, a) for a in word])
        except SchemaError:
            continue
        if best is None or len(D.cells) < len(best.cells):
            best = D
    return best


def fill_loop(X: Complex2PE, loop, max_cells: int = 64, prefix=None, allow_bridges: bool = True) -> DiscDiagram:
    """Least-area filling found by search (or by flood fill for simple loops in surfaces).

    ``prefix`` forces initial moves, which is how non-reduced fixtures are
    made; the remainder is completed by search.
    """
    word = parse_loop(X, loop)
    if prefix is None:
        D = _flood_fill(X, word, max_cells)
        if D is not None:
            return D
        moves = _search(X, word, max_cells, allow_bridges)
        if moves is None:
            raise Exceeded(f"no filling with at most {max_cells} cells", bound=max_cells)
        return replay(X, word, moves)
    st = _State(X, [[(a, None) for a in word]], None)
    st.normalize()
    for mv in prefix:
        if mv[0] == "attach":
            st.attach(mv[1], mv[2])
        else:
            st.bridge(mv[1], mv[2])
    words = [[x[0] for x in r] for r in st.regions]
    rest = []
    # complete each remaining region in turn; regions are independent
    while st.regions:
        sub = _search(X, [x[0] for x in st.regions[0]], max_cells, allow_bridges)
        if sub is None:
            raise Exceeded(f"no completion with at most {max_cells} cells", bound=max_cells)
        # moves of the sub-search address region 0 and regions it creates, which
        # sit at the front of the region list in the same order
        for mv in sub:
            if mv[0] == "attach":
                st.attach(mv[1], mv[2])
            else:
                st.bridge(mv[1], mv[2])
            rest.append(mv)
    del words
    return replay(X, word, list(prefix) + rest)


def build_reduced_disc_diagram(X: Complex2PE, loop, max_cells: int = 64) -> DiscDiagram:
    from .reduce import reduce_diagram

    D = fill_loop(X, loop, max_cells)
    return reduce_diagram(D)
