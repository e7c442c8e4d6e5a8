"""Geodesics in nonpositively curved complexes.

A mesh shortest path gives a first corridor.  The corridor is then
straightened exactly: its cells are unfolded into the plane across shared
edges and the shortest path through the unfolded channel is found with the
funnel algorithm.  Wherever the result bends at a vertex by less than pi in
the link, the cells on the short side of the bend are added to the channel
and the process repeats.  The fixed point is a local geodesic, which in a
CAT(0) complex is the geodesic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .complex_core import (
    AtVertex,
    Complex2PE,
    InCell,
    OnEdge,
    PLPath,
    PointLocation,
    carrier_in,
    carriers,
    clean_path,
    cross2,
    direction_distance,
    direction_point,
    direction_space_at,
    graph_point_route,
    locate_in_cell,
    rigid_map,
    same_point,
    validate_location,
    vertex_link,
)
from .errors import DegenerateInput, InvariantBreach, NoPathFound, NotNPC
from .link_analysis import check_link_condition
from .mesh import get_mesh

ANGLE_TOL = 1e-9
MAX_ROUNDS = 500


def assert_npc(X: Complex2PE, tol: float = 1e-9):
    v = X.__dict__.get("_npc_verdict")
    if v is None:
        v = check_link_condition(X, tol)
        X.__dict__["_npc_verdict"] = v
    if not v.passed:
        raise NotNPC(f"link condition fails at {v.worst_vertex} (loop {v.loop_length:.6g})")
    return v


# ----------------------------------------------------------------------------
# local geodesy


@dataclass
class GeodesyVerdict:
    ok: bool
    index: int | None = None
    point: PointLocation | None = None
    link_distance: float | None = None

    def __bool__(self) -> bool:
        return self.ok

    def to_json(self) -> dict:
        from .complex_core import location_to_str

        if self.ok:
            return {"status": "yes"}
        return {"status": "no", "index": self.index, "point": location_to_str(self.point), "link_distance": self.link_distance}


def breakpoint_angle(X: Complex2PE, P: PLPath, k: int) -> float:
    """Direction-space distance between the two germs of P at breakpoint k."""
    A, B = P.cells[k - 1], P.cells[k]
    a_prev, a_here = P.seg[k - 1]
    b_here, b_next = P.seg[k]
    return direction_distance(X, P.points[k], (A, a_prev - a_here), (B, b_next - b_here))


def is_local_geodesic(X: Complex2PE, P: PLPath, tol: float = ANGLE_TOL) -> GeodesyVerdict:
    Q = clean_path(P)
    for k in range(1, len(Q.points) - 1):
        d = breakpoint_angle(X, Q, k)
        if d < math.pi - tol:
            return GeodesyVerdict(False, k, Q.points[k], d)
    return GeodesyVerdict(True)


# ----------------------------------------------------------------------------
# channels


@dataclass
class _Channel:
    start: PointLocation
    end: PointLocation
    cells: list[int] = field(default_factory=list)
    portals: list[str] = field(default_factory=list)  # edge between cells[i] and cells[i+1]


def _fan(X: Complex2PE, v: str, A: int, dA: np.ndarray, B: int, dB: np.ndarray) -> tuple[list[int], list[str]]:
    """Cells and shared edges along a shortest link route between two germs at v."""
    loc = AtVertex(v)
    G = vertex_link(X, v)
    pa = direction_point(X, loc, A, dA, G)
    pb = direction_point(X, loc, B, dB, G)
    _, E, N = graph_point_route(G, pa, pb)
    cells = [X.cidx[G.edges[k][3][0]] for k in E]
    portals = [G.nodes[n][1] for n in N]
    return cells, portals


def _channels(X: Complex2PE, P: PLPath, tol: float) -> list[_Channel]:
    """Split P at its fixed points and describe the cells between them."""
    chans = [_Channel(P.points[0], P.points[0], [P.cells[0]])]
    for k in range(1, len(P.points) - 1):
        b = P.points[k]
        A, B = P.cells[k - 1], P.cells[k]
        cur = chans[-1]
        if isinstance(b, AtVertex):
            a_prev, a_here = P.seg[k - 1]
            b_here, b_next = P.seg[k]
            dA, dB = a_prev - a_here, b_next - b_here
            ang = direction_distance(X, b, (A, dA), (B, dB))
            if ang >= math.pi - tol:
                cur.end = b
                chans.append(_Channel(b, b, [B]))
                continue
            cells, portals = _fan(X, b.v, A, dA, B, dB)
            cur.cells.extend(cells[1:])
            cur.portals.extend(portals)
        elif isinstance(b, OnEdge):
            if A != B:
                cur.cells.append(B)
                cur.portals.append(b.e)
        # in-cell breakpoints join two segments of the same cell
    chans[-1].end = P.points[-1]
    return chans


def _edge_ends_in(X: Complex2PE, ci: int, eid: str) -> tuple[np.ndarray, np.ndarray]:
    """Frame coordinates of the v0 and v1 ends of edge ``eid`` in cell ci."""
    c = X.cells[ci]
    j = c.sides.index(eid)
    a, b = c.side_points(j)
    return (a, b) if c.signs[j] > 0 else (b, a)


def _unfold(X: Complex2PE, ch: _Channel):
    """Rigid placements (R, t) of the channel cells, first cell at identity."""
    maps = [(np.eye(2), np.zeros(2))]
    for i, eid in enumerate(ch.portals):
        c0, c1 = ch.cells[i], ch.cells[i + 1]
        R0, t0 = maps[-1]
        p0, p1 = _edge_ends_in(X, c0, eid)
        P0, P1 = R0 @ p0 + t0, R0 @ p1 + t0
        q0, q1 = _edge_ends_in(X, c1, eid)
        prev_c = R0 @ X.cells[c0].centroid() + t0
        R, t = rigid_map(q0, q1, P0, P1)
        nc = R @ X.cells[c1].centroid() + t
        e = P1 - P0
        if cross2(e, prev_c - P0) * cross2(e, nc - P0) > 0:
            R, t = rigid_map(q0, q1, P0, P1, reflect=True)
        maps.append((R, t))
    return maps


def _funnel(start: np.ndarray, end: np.ndarray, lefts: list[np.ndarray], rights: list[np.ndarray]):
    """Simple stupid funnel; returns apex points with their portal indices.

    Portal 0 is the start and portal n-1 the end.
    """
    portals_l = [start] + lefts + [end]
    portals_r = [start] + rights + [end]
    n = len(portals_l)
    eps = 1e-13

    def same(a, b):
        return abs(a[0] - b[0]) <= eps and abs(a[1] - b[1]) <= eps

    apex, left, right = start, start, start
    ia = il = ir = 0
    out = [(start, 0)]
    i = 1
    while i < n:
        l, r = portals_l[i], portals_r[i]
        # tighten the right side
        if cross2(right - apex, r - apex) >= -eps:
            if same(apex, right) or cross2(left - apex, r - apex) < -eps:
                right, ir = r, i
            else:
                apex, ia = left, il
                out.append((apex, ia))
                left = right = apex
                il = ir = ia
                i = ia + 1
                continue
        # tighten the left side
        if cross2(left - apex, l - apex) <= eps:
            if same(apex, left) or cross2(right - apex, l - apex) > eps:
                left, il = l, i
            else:
                apex, ia = right, ir
                out.append((apex, ia))
                left = right = apex
                il = ir = ia
                i = ia + 1
                continue
        i += 1
    if out[-1][1] != n - 1:
        out.append((end, n - 1))
    return out


def _straighten_channel(X: Complex2PE, ch: _Channel) -> PLPath:
    # ends lying on a portal edge can enter the channel further along
    k0 = max(i for i, ci in enumerate(ch.cells) if carrier_in(X, ch.start, ci) is not None)
    k1 = min(j for j in range(k0, len(ch.cells)) if carrier_in(X, ch.end, ch.cells[j]) is not None)
    if (k0, k1) != (0, len(ch.cells) - 1):
        ch = _Channel(ch.start, ch.end, ch.cells[k0:k1 + 1], ch.portals[k0:k1])
    if not ch.portals:
        ci = ch.cells[0]
        return clean_path(PLPath(X, [ch.start, ch.end], [ci]))
    maps = _unfold(X, ch)
    R0, t0 = maps[0]
    s = carrier_in(X, ch.start, ch.cells[0])
    e_loc = carrier_in(X, ch.end, ch.cells[-1])
    Rl, tl = maps[-1]
    S = R0 @ s + t0
    E = Rl @ e_loc + tl
    lefts, rights, ends = [], [], []
    for i, eid in enumerate(ch.portals):
        R, t = maps[i]
        p0, p1 = _edge_ends_in(X, ch.cells[i], eid)
        P0, P1 = R @ p0 + t, R @ p1 + t
        Rn, tn = maps[i + 1]
        d = (Rn @ X.cells[ch.cells[i + 1]].centroid() + tn) - (R @ X.cells[ch.cells[i]].centroid() + t)
        if cross2(d, P0 - P1) > 0:
            lefts.append(P0)
            rights.append(P1)
        else:
            lefts.append(P1)
            rights.append(P0)
        ends.append((P0, P1))
    apexes = _funnel(S, E, lefts, rights)
    pts: list[PointLocation] = [ch.start]
    cells: list[int] = []
    seg = 0
    for i, eid in enumerate(ch.portals):
        pi = i + 1  # portal index in the funnel numbering
        while apexes[seg + 1][1] < pi:
            seg += 1
        A, ia = apexes[seg]
        B, ib = apexes[seg + 1]
        P0, P1 = ends[i]
        L = float(np.hypot(*(P1 - P0)))
        if ia == pi:
            x = A
        elif ib == pi:
            x = B
        else:
            den = cross2(P1 - P0, B - A)
            if abs(den) < 1e-300:
                x = A
            else:
                tt = cross2(A - P0, B - A) / den
                x = P0 + min(max(tt, 0.0), 1.0) * (P1 - P0)
        t = float((x - P0) @ (P1 - P0)) / (L * L)
        t = min(max(t, 0.0), 1.0)
        e = X.edge(eid)
        if t * L < 1e-10:
            loc: PointLocation = AtVertex(e.v0)
        elif (1 - t) * L < 1e-10:
            loc = AtVertex(e.v1)
        else:
            loc = OnEdge(eid, t)
        pts.append(loc)
        cells.append(ch.cells[i])
    pts.append(ch.end)
    cells.append(ch.cells[-1])
    return _dedupe(X, pts, cells)


def _dedupe(X: Complex2PE, pts, cells) -> PLPath:
    out_p = [pts[0]]
    out_c: list[int] = []
    for k, ci in enumerate(cells):
        nxt = pts[k + 1]
        if nxt == out_p[-1]:
            continue
        # the segment must live in a cell containing both ends
        if carrier_in(X, out_p[-1], ci) is None or carrier_in(X, nxt, ci) is None:
            ca = {c for c, _ in carriers(X, out_p[-1])}
            common = [c for c, _ in carriers(X, nxt) if c in ca]
            if not common:
                raise InvariantBreach("straightened path left its channel")
            ci = common[0]
        out_p.append(nxt)
        out_c.append(ci)
    return clean_path(PLPath(X, out_p, out_c))


def straighten(X: Complex2PE, P: PLPath, tol: float = ANGLE_TOL, max_rounds: int = MAX_ROUNDS) -> PLPath:
    """Shorten P rel endpoints to a local geodesic."""
    P = clean_path(P)
    if not P.cells:
        return P
    last = math.inf
    for _ in range(max_rounds):
        pieces = [_straighten_channel(X, ch) for ch in _channels(X, P, tol)]
        Q = pieces[0]
        for piece in pieces[1:]:
            Q = PLPath(X, Q.points + piece.points[1:], Q.cells + piece.cells)
        Q = clean_path(Q)
        if not Q.cells:
            return Q
        if is_local_geodesic(X, Q, tol):
            return Q
        if Q.length > last + 1e-9:
            raise InvariantBreach("straightening increased the length")
        last = Q.length
        P = Q
    raise InvariantBreach("straightening did not converge")


# ----------------------------------------------------------------------------
# public operations


def geodesic_between(X: Complex2PE, p: PointLocation, q: PointLocation, h: float = 0.05, check: bool = True) -> tuple[PLPath, float]:
    if check:
        assert_npc(X)
    validate_location(X, p)
    validate_location(X, q)
    if same_point(X, p, q, 1e-12):
        return PLPath(X, [p]), 0.0
    ca = {ci for ci, _ in carriers(X, p)}
    shared = [ci for ci, _ in carriers(X, q) if ci in ca]
    if shared:
        P = PLPath(X, [p, q], [min(shared)])
        # a straight segment in a cell is a local geodesic
        return P, P.length
    M = get_mesh(X, h)
    targets = set()
    for ci, _ in carriers(X, q):
        targets.update(M.cell_slice(ci)[0].tolist())
    F = M.field(p, targets=targets)
    try:
        P0 = F.path_to(q)
    except NoPathFound:
        raise
    G = straighten(X, P0)
    if not is_local_geodesic(X, G):
        raise InvariantBreach("geodesic certificate failed")
    return G, G.length


def distance(X: Complex2PE, p: PointLocation, q: PointLocation, h: float = 0.05) -> float:
    return geodesic_between(X, p, q, h)[1]


def geodesic_through(X: Complex2PE, pts: list[PointLocation], h: float = 0.05) -> PLPath:
    """Concatenation of geodesics through consecutive points."""
    P = None
    for a, b in zip(pts, pts[1:]):
        g, _ = geodesic_between(X, a, b, h)
        P = g if P is None else PLPath(X, P.points + g.points[1:], P.cells + g.cells)
    if P is None:
        return PLPath(X, [pts[0]])
    return clean_path(P)


# ----------------------------------------------------------------------------
# angles and comparison triangles


@dataclass
class ComparisonTriangle:
    sides: tuple[float, float, float]  # |pq|, |qr|, |rp|
    p: np.ndarray
    q: np.ndarray
    r: np.ndarray
    angles: tuple[float, float, float]

    @classmethod
    def from_lengths(cls, a: float, b: float, c: float) -> "ComparisonTriangle":
        """a = |pq|, b = |qr|, c = |rp|."""
        if a > b + c + 1e-9 or b > a + c + 1e-9 or c > a + b + 1e-9:
            raise DegenerateInput("side lengths violate the triangle inequality")
        p = np.zeros(2)
        q = np.array([a, 0.0])
        if a == 0:
            r = np.array([c, 0.0])
        else:
            x = (a * a + c * c - b * b) / (2 * a)
            y = math.sqrt(max(c * c - x * x, 0.0))
            r = np.array([x, y])
        return cls((a, b, c), p, q, r, (_angle(a, c, b), _angle(a, b, c), _angle(b, c, a)))

    def point(self, side: int, frac: float) -> np.ndarray:
        P = [self.p, self.q, self.r]
        return P[side] + frac * (P[(side + 1) % 3] - P[side])


def _angle(x: float, y: float, opp: float) -> float:
    """Angle between sides x, y opposite to side ``opp`` (law of cosines)."""
    if x == 0 or y == 0:
        return 0.0
    c = (x * x + y * y - opp * opp) / (2 * x * y)
    return math.acos(min(1.0, max(-1.0, c)))


def comparison_angle(dpx: float, dpy: float, dxy: float) -> float:
    return _angle(dpx, dpy, dxy)


def alexandrov_angle(X: Complex2PE, p: PointLocation, x: PointLocation, y: PointLocation, h: float = 0.05,
                     tol: float = 1e-6, max_halvings: int = 40) -> float:
    """Limit of comparison angles along the geodesics [p,x] and [p,y]."""
    if same_point(X, p, x) or same_point(X, p, y):
        raise DegenerateInput("angle needs x != p and y != p")
    gx, lx = geodesic_between(X, p, x, h)
    gy, ly = geodesic_between(X, p, y, h)
    t = min(0.1, 0.5 * min(lx, ly))
    prev = None
    for _ in range(max_halvings):
        a, b = gx.point_at(t), gy.point_at(t)
        d = distance(X, a, b, h)
        ang = 2 * math.asin(min(1.0, d / (2 * t)))
        if prev is not None:
            if ang > prev + 1e-7:
                raise InvariantBreach("comparison angles increased as t shrank")
            if prev - ang < tol:
                return ang
        prev = ang
        t *= 0.5
    return prev


@dataclass
class ProbeReport:
    cat0_violation: float
    convexity_violation: float
    angle_gaps: list
    samples: int
    exact: bool

    def to_json(self) -> dict:
        return {
            "max_cat0_violation": self.cat0_violation,
            "max_convexity_violation": self.convexity_violation,
            "corner_angle_gaps": self.angle_gaps,
            "samples": self.samples,
            "distance_oracle": "exact" if self.exact else "mesh",
        }


def comparison_probe(X: Complex2PE, tri: tuple[PointLocation, PointLocation, PointLocation], n: int = 16,
                     h: float = 0.05, mesh_h: float = 0.01) -> ProbeReport:
    """Sampled CAT(0) and convexity residuals for the geodesic triangle ``tri``.

    Complexes failing the link condition are measured with mesh distances
    (an upper bound on the true distance), so violations reported there
    are witnesses rather than certified values.
    """
    p, q, r = tri
    try:
        assert_npc(X)
        exact = True
    except NotNPC:
        exact = False
    if exact:
        def dist(a, b):
            return distance(X, a, b, h)

        def geo(a, b):
            return geodesic_between(X, a, b, h)[0]
    else:
        M = get_mesh(X, mesh_h)

        def dist(a, b):
            targets = set()
            for ci, _ in carriers(X, b):
                targets.update(M.cell_slice(ci)[0].tolist())
            return M.field(a, targets=targets).distance_to(b)

        def geo(a, b):
            if same_point(X, a, b, 1e-12):
                return PLPath(X, [a])
            return M.field(a).path_to(b)

    sides = [geo(p, q), geo(q, r), geo(r, p)]
    lens = [s.length for s in sides]
    tri_bar = ComparisonTriangle.from_lengths(*lens) if max(lens) > 0 else None
    worst = 0.0 if exact else -math.inf
    samples = 0
    fr = [(i + 0.5) / n for i in range(n)] if n > 0 else []
    if tri_bar is not None:
        for si in range(3):
            sj = (si + 1) % 3
            for f in fr:
                for g in fr[::max(1, n // 4)]:
                    a = sides[si].point_at(f * lens[si])
                    b = sides[sj].point_at(g * lens[sj])
                    d = dist(a, b)
                    db = float(np.hypot(*(tri_bar.point(si, f) - tri_bar.point(sj, g))))
                    worst = max(worst, d - db)
                    samples += 1
    # convexity along the two sides leaving each corner
    conv = 0.0 if exact else -math.inf
    corners = [(sides[0], sides[2].reversed(), lens[1]), (sides[1], sides[0].reversed(), lens[2]), (sides[2], sides[1].reversed(), lens[0])]
    for g1, g2, far in corners:
        for f in fr:
            a = g1.point_at(f * g1.length)
            b = g2.point_at(f * g2.length)
            conv = max(conv, dist(a, b) - f * far)
    gaps = []
    if exact and tri_bar is not None:
        pts = [p, q, r]
        for k in range(3):
            x0, x1, x2 = pts[k], pts[(k + 1) % 3], pts[(k + 2) % 3]
            if same_point(X, x0, x1) or same_point(X, x0, x2):
                gaps.append(None)
                continue
            al = alexandrov_angle(X, x0, x1, x2, h)
            gaps.append(al - tri_bar.angles[k])
    return ProbeReport(float(worst), float(conv), gaps, samples, exact)
