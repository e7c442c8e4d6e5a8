"""Cancelable pairs and their removal."""
from __future__ import annotations

from ..errors import InvariantBreach, SchemaError
from .build import _UF
from .model import DCell, DiscDiagram


def find_cancelable_pair(D: DiscDiagram):
    """Lexicographically first pair of cells that map mirror-wise across a shared edge.

    Returns (cell id, cell id, edge id) or None.
    """
    best = None
    ec = D.edge_cells()
    for e, inc in ec.items():
        if len(inc) != 2:
            continue
        (i1, j1), (i2, j2) = inc
        c1, c2 = D.cells[i1], D.cells[i2]
        if c1.target != c2.target:
            continue
        n = len(c1.corners)
        if (c1.offset + j1) % n != (c2.offset + j2) % n:
            continue
        # both copies must meet the edge at the same target corner
        if D.vmap[c1.corners[j1]] != D.vmap[c2.corners[j2]]:
            continue
        if c1.corners[j1] != c2.corners[j2]:
            continue
        key = tuple(sorted((c1.id, c2.id))) + (e,)
        if best is None or key < best:
            best = key
    return best


def is_reduced(D: DiscDiagram) -> bool:
    return find_cancelable_pair(D) is None


def cancel_pair(D: DiscDiagram, a: str, b: str, e: str) -> DiscDiagram:
    """Excise cells a and b and sew the resulting hole shut."""
    ia, ib = D.cidx[a], D.cidx[b]
    ca, cb = D.cells[ia], D.cells[ib]
    n = len(ca.corners)
    vid = {v: k for k, v in enumerate(D.vertices)}
    enames = list(D.edges)
    eid = {x: k for k, x in enumerate(enames)}
    vuf, euf = _UF(), _UF()
    for _ in D.vertices:
        vuf.add()
    for _ in enames:
        euf.add()
    for t in range(n):
        ka, kb = (t - ca.offset) % n, (t - cb.offset) % n
        vuf.union(vid[ca.corners[ka]], vid[cb.corners[kb]])
        euf.union(eid[ca.sides[ka]], eid[cb.sides[kb]])
    dead_edge = euf.find(eid[e])

    vname = {}
    for v in D.vertices:
        r = vuf.find(vid[v])
        vname.setdefault(r, v)
    rv = {v: vname[vuf.find(vid[v])] for v in D.vertices}
    ename = {}
    for x in enames:
        ename.setdefault(euf.find(eid[x]), x)
    re = {x: ename[euf.find(eid[x])] for x in enames}

    cells = [c for c in D.cells if c.id not in (a, b)]
    new_cells = [DCell(c.id, c.target, c.offset, [rv[v] for v in c.corners], [re[x] for x in c.sides], c.flip) for c in cells]
    edges = {}
    for x in enames:
        r = re[x]
        if euf.find(eid[x]) == dead_edge and r not in {s for c in new_cells for s in c.sides}:
            continue
        u, v = D.edges[r]
        edges[r] = (rv[u], rv[v])
    outer = []
    for h in D.outer:
        x, s = h
        r = re[x]
        u, v = D.edges[x]
        tail, head = (rv[u], rv[v]) if s > 0 else (rv[v], rv[u])
        eu, ev = edges[r]
        if eu == ev:
            raise InvariantBreach("sewing collapsed a boundary edge")
        outer.append((r, 1 if (tail, head) == (eu, ev) else -1))

    # keep only what stays attached to the boundary
    used_e = {x for x, _ in outer} | {s for c in new_cells for s in c.sides}
    adj: dict[str, set] = {}
    for x in used_e:
        u, v = edges[x]
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    start = [edges[outer[0][0]][0]] if outer else []
    seen = set(start)
    stack = list(start)
    while stack:
        u = stack.pop()
        for w in adj.get(u, ()):
            if w not in seen:
                seen.add(w)
                stack.append(w)
    new_cells = [c for c in new_cells if c.corners[0] in seen]
    used_e = {x for x, _ in outer} | {s for c in new_cells for s in c.sides}
    edges = {x: uv for x, uv in edges.items() if x in used_e}
    verts = [v for v in dict.fromkeys(rv[v] for v in D.vertices) if v in seen or not outer]
    if not outer:
        verts = [v for v in verts if any(v in uv for uv in edges.values())] or verts[:1]
    vmap = {v: D.vmap[v] for v in verts}
    emap = {x: D.emap[x] for x in edges}
    return DiscDiagram(D.target, verts, edges, new_cells, outer, vmap, emap, orient=False)


def reduce_diagram(D: DiscDiagram, max_steps: int = 100000) -> DiscDiagram:
    """Cancel pairs until none remain; the boundary word is unchanged."""
    word = D.boundary_word()
    for _ in range(max_steps):
        p = find_cancelable_pair(D)
        if p is None:
            return D
        before = len(D.cells)
        try:
            D = cancel_pair(D, *p)
        except SchemaError as exc:
            raise InvariantBreach(f"reduction broke the diagram: {exc}") from exc
        if len(D.cells) > before - 2 or D.boundary_word() != word:
            raise InvariantBreach("reduction changed the boundary or failed to shrink")
    raise InvariantBreach("reduction did not terminate")
