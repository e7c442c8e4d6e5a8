"""Measurements of hyperbolicity relative to flats.

Every distance below comes from a Steiner-mesh field and overestimates the
true distance by a small amount; reports carry an uncertainty of 2h.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .complex_core import Complex2PE, PLPath, PointLocation, location_to_str, same_point
from .errors import BadParams, PreconditionRuffleFailed, SchemaError
from .mesh import get_mesh

DEFAULT_H = 0.05


@dataclass(frozen=True)
class QGParams:
    lam: float
    eps: float

    def __post_init__(self):
        if not (self.lam >= 1 and self.eps >= 0):
            raise BadParams("quasigeodesic parameters need lambda >= 1 and eps >= 0")


@dataclass
class Measurement:
    value: float
    uncertainty: float
    detail: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"value": self.value, "uncertainty": self.uncertainty, **self.detail}


class _UnionField:
    """Pointwise minimum of several mesh fields."""

    def __init__(self, fields):
        self.fields = list(fields)

    def distance_to(self, loc: PointLocation) -> float:
        return min(f.distance_to(loc) for f in self.fields)


def _source_field(X: Complex2PE, src, h: float):
    mesh = get_mesh(X, h)
    if hasattr(src, "cells") and isinstance(getattr(src, "cells"), frozenset):
        return mesh.field(sorted(src.cells))
    return mesh.field(src)


def _one_sided(X: Complex2PE, P: PLPath, fld, h: float) -> tuple[float, float]:
    best, at = 0.0, 0.0
    for s, loc in P.sample(h, include_breakpoints=True):
        d = fld.distance_to(loc)
        if d > best:
            best, at = d, s
    return best, at


def hausdorff_distance(X: Complex2PE, P: PLPath, Q: PLPath, h: float = DEFAULT_H) -> Measurement:
    fQ = _source_field(X, Q, h)
    fP = _source_field(X, P, h)
    a, sa = _one_sided(X, P, fQ, h)
    b, sb = _one_sided(X, Q, fP, h)
    return Measurement(max(a, b), 2 * h, {"P_to_Q": a, "Q_to_P": b})


def thinness(X: Complex2PE, sides, h: float = DEFAULT_H, flat=None) -> Measurement:
    """Least delta with each side inside the delta-neighbourhood of the other two (and ``flat``)."""
    sides = list(sides)
    if len(sides) != 3:
        raise BadParams("a triangle has three sides")
    fields = [_source_field(X, P, h) for P in sides]
    ff = _source_field(X, flat, h) if flat is not None else None
    per = []
    worst = (0.0, 0, 0.0)
    for i in range(3):
        others = [fields[j] for j in range(3) if j != i] + ([ff] if ff is not None else [])
        d, s = _one_sided(X, sides[i], _UnionField(others), h)
        per.append(d)
        if d > worst[0]:
            worst = (d, i, s)
    return Measurement(worst[0], 2 * h, {"per_side": per, "side": worst[1], "s": worst[2]})


def relative_thinness(X: Complex2PE, sides, F, h: float = DEFAULT_H) -> Measurement:
    return thinness(X, sides, h, flat=F)


# ----------------------------------------------------------------------------
# quasigeodesics


@dataclass
class QGVerdict:
    ok: bool
    s: float | None = None
    t: float | None = None
    which: str | None = None
    distance: float | None = None
    worst_margin: float = math.inf

    def __bool__(self) -> bool:
        return self.ok

    def to_json(self) -> dict:
        out = {"status": "yes" if self.ok else "no", "worst_margin": self.worst_margin}
        if not self.ok:
            out.update({"s": self.s, "t": self.t, "inequality": self.which, "distance": self.distance})
        return out


def sample_distance_matrix(X: Complex2PE, A: list[PointLocation], B: list[PointLocation], h: float) -> np.ndarray:
    """d(A[i], B[j]) from one mesh field per point of B."""
    mesh = get_mesh(X, h)
    out = np.empty((len(A), len(B)))
    for j, b in enumerate(B):
        f = mesh.field(b)
        for i, a in enumerate(A):
            out[i, j] = f.distance_to(a)
    return out


def check_quasigeodesic(X: Complex2PE, P: PLPath, params: QGParams, h: float = 0.25, mesh_h: float = DEFAULT_H) -> QGVerdict:
    """Both quasigeodesic inequalities on all pairs of samples at spacing h."""
    lam, eps = params.lam, params.eps
    samp = P.sample(h)
    ss = np.array([s for s, _ in samp])
    locs = [loc for _, loc in samp]
    D = sample_distance_matrix(X, locs, locs, mesh_h)
    slack = 2 * mesh_h
    worst = math.inf
    for i in range(len(ss)):
        for j in range(i + 1, len(ss)):
            dst = abs(ss[j] - ss[i])
            d = min(D[i, j], D[j, i])
            upper = lam * dst + eps + slack - d
            lower = d - (dst / lam - eps)
            worst = min(worst, upper, lower)
            if upper < 0:
                return QGVerdict(False, float(ss[i]), float(ss[j]), "upper", float(d), worst)
            if lower < -1e-9:
                return QGVerdict(False, float(ss[i]), float(ss[j]), "lower", float(d), worst)
    return QGVerdict(True, worst_margin=worst)


@dataclass
class Taming:
    path: PLPath
    params: QGParams
    samples: list[float]
    points: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "path": self.path.to_json(),
            "lambda": self.params.lam,
            "eps": self.params.eps,
            "samples": self.samples,
        }


def tamed_params(params: QGParams) -> QGParams:
    """Constants for the taming of a (lam, eps)-quasigeodesic.

    A tamed point lies within 1/2 of a sample, and consecutive samples are
    at most 1 apart, which costs 1 + 1/lam in the additive constant.
    """
    return QGParams(params.lam, params.eps + 1.0 + 1.0 / params.lam)


def tame_quasigeodesic(X: Complex2PE, P: PLPath, params: QGParams, h: float = DEFAULT_H) -> Taming:
    """Join samples at unit arclength by geodesics."""
    from .geodesics import geodesic_through

    L = P.length
    ss = [float(k) for k in range(int(math.floor(L + 1e-12)) + 1)]
    if L - ss[-1] > 1e-9:
        ss.append(L)
    pts = [P.start] + [P.point_at(s) for s in ss[1:-1]] + ([P.end] if len(ss) > 1 else [])
    Q = geodesic_through(X, pts, h)
    return Taming(Q, tamed_params(params), ss, pts)


def is_piecewise_geodesic(X: Complex2PE, T: Taming, tol: float = 1e-9) -> bool:
    """Every bend of the tamed path sits at one of its sample points."""
    from .geodesics import breakpoint_angle

    from .complex_core import clean_path

    Q = clean_path(T.path)
    for k in range(1, len(Q.points) - 1):
        if breakpoint_angle(X, Q, k) < math.pi - tol:
            if not any(same_point(X, Q.points[k], p, 1e-8) for p in T.points):
                return False
    return True


# ----------------------------------------------------------------------------
# fellow travelling relative to flats


@dataclass
class FTCertificate:
    flats: list[str]
    t: list[float]
    s: list[float]
    t2: list[float]
    s2: list[float]
    L: float
    uncertainty: float

    @property
    def n(self) -> int:
        return len(self.flats)

    def to_json(self) -> dict:
        return {
            "flats": self.flats,
            "alpha_partition": {"t": self.t, "s": self.s},
            "alpha2_partition": {"t": self.t2, "s": self.s2},
            "L": self.L,
            "uncertainty": self.uncertainty,
        }


def fellow_travel_certificate(X: Complex2PE, alpha: PLPath, alpha2: PLPath, flats, L: float,
                              h: float = 0.25, mesh_h: float | None = None) -> FTCertificate | None:
    """Search matched partitions alternating tracking intervals and flat intervals.

    Returns a revalidated certificate, or None when none exists at this L
    and sampling.  Ties prefer fewer flats, then less total flat length.
    """
    if not (same_point(X, alpha.start, alpha2.start, 1e-9) and same_point(X, alpha.end, alpha2.end, 1e-9)):
        raise BadParams("paths must share endpoints")
    hh = min(1.0, L / 4) if L > 0 else h
    mh = mesh_h if mesh_h is not None else min(h, hh)
    unc = 2 * mh
    A = alpha.sample(hh)
    B = alpha2.sample(hh)
    sa = [s for s, _ in A]
    sb = [s for s, _ in B]
    Dm = sample_distance_matrix(X, [l for _, l in A], [l for _, l in B], mh)
    close = Dm <= L + unc
    flats = list(flats)
    mesh = get_mesh(X, mh)
    near_a, near_b = [], []
    for F in flats:
        f = mesh.field(sorted(F.cells))
        near_a.append(np.array([f.distance_to(l) <= L + unc for _, l in A]))
        near_b.append(np.array([f.distance_to(l) <= L + unc for _, l in B]))
    na, nb = len(A), len(B)
    T = -1
    start = (0, 0, T)
    goal = (na - 1, nb - 1, T)
    if not close[0, 0]:
        return None
    best = {start: (0, 0.0)}
    prev: dict = {start: None}
    pq = [((0, 0.0), start)]
    while pq:
        cost, st = heapq.heappop(pq)
        if best.get(st) != cost:
            continue
        if st == goal:
            break
        i, j, ph = st
        nxt = []
        if ph == T:
            for di, dj in ((1, 0), (0, 1), (1, 1)):
                a, b = i + di, j + dj
                if a < na and b < nb and close[a, b]:
                    nxt.append(((a, b, T), cost))
            for f in range(len(flats)):
                if near_a[f][i] and near_b[f][j]:
                    nxt.append(((i, j, f), (cost[0] + 1, cost[1])))
        else:
            f = ph
            if i + 1 < na and near_a[f][i + 1]:
                nxt.append(((i + 1, j, f), (cost[0], cost[1] + sa[i + 1] - sa[i])))
            if j + 1 < nb and near_b[f][j + 1]:
                nxt.append(((i, j + 1, f), (cost[0], cost[1] + sb[j + 1] - sb[j])))
            if close[i, j]:
                nxt.append(((i, j, T), cost))
        for s2, c2 in nxt:
            if s2 not in best or c2 < best[s2]:
                best[s2] = c2
                prev[s2] = st
                heapq.heappush(pq, (c2, s2))
    if goal not in best:
        return None
    chain = []
    st = goal
    while st is not None:
        chain.append(st)
        st = prev[st]
    chain.reverse()
    # phases: runs of equal ph
    runs: list[tuple[int, list[tuple[int, int]]]] = []
    for i, j, ph in chain:
        if runs and runs[-1][0] == ph:
            runs[-1][1].append((i, j))
        else:
            runs.append((ph, [(i, j)]))
    names = []
    t, s, t2, s2 = [], [], [], []
    for ph, pts in runs:
        if ph == T:
            t.append(sa[pts[0][0]])
            t2.append(sb[pts[0][1]])
            s.append(sa[pts[-1][0]])
            s2.append(sb[pts[-1][1]])
        else:
            names.append(flats[ph].name or f"flat{ph}")
    cert = FTCertificate(names, t, s, t2, s2, L, unc)
    # the DP found it; check it again from the samples alone
    if not validate_certificate(X, alpha, alpha2, flats, cert, hh, mh, Dm, sa, sb):
        raise SchemaError("fellow-travel certificate failed revalidation")
    return cert


def validate_certificate(X: Complex2PE, alpha: PLPath, alpha2: PLPath, flats, cert: FTCertificate,
                         hh: float | None = None, mh: float | None = None, Dm=None, sa=None, sb=None) -> bool:
    """Check monotone partitions, tracking Hausdorff bounds and flat-neighbourhood bounds."""
    tol = 1e-9
    if hh is None:
        hh = min(1.0, cert.L / 4) if cert.L > 0 else 0.25
    if mh is None:
        mh = cert.uncertainty / 2
    n = cert.n
    if not (len(cert.t) == len(cert.s) == len(cert.t2) == len(cert.s2) == n + 1):
        return False
    seq = []
    seq2 = []
    for i in range(n + 1):
        seq += [cert.t[i], cert.s[i]]
        seq2 += [cert.t2[i], cert.s2[i]]
    if any(b < a - tol for a, b in zip(seq, seq[1:])) or any(b < a - tol for a, b in zip(seq2, seq2[1:])):
        return False
    if abs(seq[0]) > tol or abs(seq2[0]) > tol:
        return False
    if abs(seq[-1] - alpha.length) > tol or abs(seq2[-1] - alpha2.length) > tol:
        return False
    if Dm is None:
        A = alpha.sample(hh)
        B = alpha2.sample(hh)
        sa = [s for s, _ in A]
        sb = [s for s, _ in B]
        Dm = sample_distance_matrix(X, [l for _, l in A], [l for _, l in B], mh)
    sa = np.asarray(sa)
    sb = np.asarray(sb)
    bound = cert.L + cert.uncertainty
    for i in range(n + 1):
        ia = np.nonzero((sa >= cert.t[i] - tol) & (sa <= cert.s[i] + tol))[0]
        ib = np.nonzero((sb >= cert.t2[i] - tol) & (sb <= cert.s2[i] + tol))[0]
        if len(ia) == 0 or len(ib) == 0:
            return False
        sub = Dm[np.ix_(ia, ib)]
        if sub.min(axis=1).max() > bound or sub.min(axis=0).max() > bound:
            return False
    by_name = {(F.name or f"flat{k}"): F for k, F in enumerate(flats)}
    mesh = get_mesh(X, mh)
    for i in range(1, n + 1):
        F = by_name.get(cert.flats[i - 1])
        if F is None:
            return False
        f = mesh.field(sorted(F.cells))
        for P, a, b in ((alpha, cert.s[i - 1], cert.t[i]), (alpha2, cert.s2[i - 1], cert.t2[i])):
            for s, loc in P.sample(hh):
                if a - tol <= s <= b + tol and f.distance_to(loc) > bound:
                    return False
    return True


# ----------------------------------------------------------------------------
# divergence


def quadratic_bound(r: float, R: float, theta: float) -> float:
    """R theta k (k-1) / 2 with k = floor(r / 2R); zero when r < 2R."""
    if r < 2 * R:
        return 0.0
    k = math.floor(r / (2 * R))
    return R * theta * k * (k - 1) / 2


def broom_bound(M: float, N: float, theta: float) -> float:
    return (M - N) * theta / 2


@dataclass
class Broom:
    height: float
    handle: float
    theta: float
    outer_length: float

    @property
    def bound(self) -> float:
        return broom_bound(self.height, self.handle, self.theta)

    @property
    def margin(self) -> float:
        return self.outer_length - self.bound

    def to_json(self) -> dict:
        return {"height": self.height, "handle": self.handle, "theta": self.theta,
                "outer_length": self.outer_length, "bound": self.bound, "margin": self.margin}


def extract_broom(X: Complex2PE, tip: PointLocation, x: PointLocation, y: PointLocation, h: float = DEFAULT_H) -> Broom:
    """Broom with geodesic sides [tip, x] and [tip, y] and outer path the geodesic [x, y]."""
    from .geodesics import alexandrov_angle, geodesic_between

    ga, la = geodesic_between(X, tip, x, h)
    gb, lb = geodesic_between(X, tip, y, h)
    M = min(la, lb)
    # geodesics from a common point never meet again after separating
    lo, hi = 0.0, M
    if same_point(X, ga.point_at(M), gb.point_at(M), 1e-9):
        lo = M
    else:
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if same_point(X, ga.point_at(mid), gb.point_at(mid), 1e-9):
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-10:
                break
    N = lo
    if N >= M - 1e-9:
        theta = 0.0
    else:
        theta = alexandrov_angle(X, ga.point_at(N), x, y, h)
    _, lxy = geodesic_between(X, x, y, h)
    return Broom(M, N, theta, lxy)


@dataclass
class DivergenceReport:
    alpha_length: float
    samples: list = field(default_factory=list)  # (s, r, k, bound, margin)
    brooms: list = field(default_factory=list)
    uncertainty: float = 0.0

    @property
    def ok(self) -> bool:
        return all(m >= -1e-9 for *_, m in self.samples) and all(b.margin >= -1e-9 for b in self.brooms)

    @property
    def min_margin(self) -> float:
        ms = [m for *_, m in self.samples] + [b.margin for b in self.brooms]
        return min(ms) if ms else math.inf

    def to_json(self) -> dict:
        return {
            "status": "pass" if self.ok else "fail",
            "alpha_length": self.alpha_length,
            "min_margin": self.min_margin,
            "samples": [{"s": s, "r": r, "k": k, "bound": b, "margin": m} for s, r, k, b, m in self.samples],
            "brooms": [b.to_json() for b in self.brooms],
            "uncertainty": self.uncertainty,
        }


def divergence_check(D, gamma_arc, params, brooms=(), h: float = DEFAULT_H, spacing: float = 0.5) -> DivergenceReport:
    """Quadratic lower bound on the length of alpha over a ruffled geodesic side gamma."""
    from .diagrams.geometry import arc_indices, arc_path, is_ruffled

    if not is_ruffled(D, gamma_arc, params, h=h):
        raise PreconditionRuffleFailed("the diagram is not ruffled along gamma")
    idx = arc_indices(D, gamma_arc)
    gamma = arc_path(D, idx)
    rest = [i for i in range(len(D.outer)) if i not in set(idx)]
    n = len(D.outer)
    if rest:
        start = (idx[-1] + 1) % n
        alpha = arc_path(D, [(start + i) % n for i in range(len(rest))])
    else:
        alpha = PLPath(gamma.X, [gamma.end])
    Y = gamma.X
    fa = get_mesh(Y, h).field(alpha)
    rep = DivergenceReport(alpha.length, uncertainty=2 * h)
    for s, loc in gamma.sample(spacing, include_breakpoints=True):
        r = fa.distance_to(loc)
        r_low = max(0.0, r - 2 * h)
        k = math.floor(r_low / (2 * params.R)) if r_low >= 2 * params.R else 0
        b = quadratic_bound(r_low, params.R, params.theta)
        rep.samples.append((s, r, k, b, alpha.length - b))
    rep.brooms = list(brooms)
    return rep
