"""Named end-to-end experiments, shared by the test suite and ``isoflats repro``.

Each experiment takes a seed and returns a JSON-ready dict with a boolean
``passed`` and the measurements behind it.
"""
from __future__ import annotations

import math
import time
from typing import Callable

import numpy as np

from .complex_core import AtVertex, Complex2PE, InCell, PLPath, location_to_str
from .diagrams import from_subcomplex, gauss_bonnet_residual, whole_complex
from .diagrams.build import fill_loop, letter_edge, parse_loop
from .diagrams.geometry import RuffleParams, is_ruffled
from .diagrams.reduce import find_cancelable_pair, is_reduced, reduce_diagram
from .errors import IsoflatsError
from .flats import detect_triplane, flat_proximity_table, meta_flats
from .generators import generate, meta_path, meta_point
from .geodesics import comparison_probe, geodesic_between, geodesic_through
from .link_analysis import check_link_condition
from .mesh import get_mesh, mesh_distance
from .rel_hyp import (
    QGParams,
    check_quasigeodesic,
    divergence_check,
    extract_broom,
    fellow_travel_certificate,
    hausdorff_distance,
    is_piecewise_geodesic,
    relative_thinness,
    tame_quasigeodesic,
    thinness,
    validate_certificate,
)

REGISTRY: dict[str, Callable[..., dict]] = {}


def experiment(name: str):
    def deco(fn):
        REGISTRY[name] = fn
        fn.experiment_id = name
        return fn

    return deco


def run(name: str, seed: int = 0, **kw) -> dict:
    if name not in REGISTRY:
        raise KeyError(name)
    t0 = time.perf_counter()
    out = REGISTRY[name](seed=seed, **kw)
    out["experiment"] = name
    out["seed"] = seed
    out["seconds"] = round(time.perf_counter() - t0, 3)
    return out


# ----------------------------------------------------------------------------
# random inputs


def random_point(X: Complex2PE, rng: np.random.Generator, cells=None) -> InCell:
    """Uniform-ish interior point: random cell, Dirichlet weights on its corners."""
    pool = list(range(len(X.cells))) if cells is None else [X.cidx[c] if isinstance(c, str) else c for c in cells]
    ci = pool[int(rng.integers(len(pool)))]
    C = X.cells[ci]
    w = rng.dirichlet(np.ones(C.size))
    x, y = w @ C.coords
    return InCell(C.id, float(x), float(y))


def random_cell_set(X: Complex2PE, size: int, rng: np.random.Generator) -> list[int]:
    """Connected set of cells grown by random edge-adjacency."""
    nbr = [set() for _ in X.cells]
    for inc in X.edge_cells:
        for a, _ in inc:
            for b, _ in inc:
                if a != b:
                    nbr[a].add(b)
    S = [int(rng.integers(len(X.cells)))]
    seen = set(S)
    while len(S) < size:
        front = sorted({b for a in S for b in nbr[a]} - seen)
        if not front:
            break
        b = front[int(rng.integers(len(front)))]
        S.append(b)
        seen.add(b)
    return S


def random_disc(X: Complex2PE, size: int, rng: np.random.Generator, tries: int = 50):
    for _ in range(tries):
        S = random_cell_set(X, size, rng)
        try:
            return from_subcomplex(X, S), S
        except IsoflatsError:
            continue
    return None, None


def seeded_nonreduced(X: Complex2PE, S: list[int], max_cells: int = 32):
    """Filling of the boundary of S whose first cell lies outside S.

    The search completes it with a mirror copy of that cell, so the result
    carries a cancelable pair by construction.
    """
    D0 = from_subcomplex(X, S)
    word = parse_loop(X, D0.boundary_word())
    e, _ = letter_edge(X, word[0])
    outside = [ci for ci, _ in X.edge_cells[X.eidx[e]] if ci not in set(S)]
    if not outside:
        return None
    try:
        return fill_loop(X, D0.boundary_word(), max_cells=max_cells, prefix=[("attach", 0, outside[0])])
    except IsoflatsError:
        return None


def npc_targets() -> dict[str, Complex2PE]:
    return {
        "grid": generate("grid", n=5),
        "hex": generate("hex", n=2),
        "cone5": generate("cone", k=5, n=2),
    }


# ----------------------------------------------------------------------------
# experiments


@experiment("gauss-bonnet")
def exp_gauss_bonnet(seed: int = 0, per_target: int = 34, tol: float = 1e-9) -> dict:
    rng = np.random.default_rng(seed)
    rows = []
    for name, X in npc_targets().items():
        diagrams = [("whole", whole_complex(X))]
        while len(diagrams) < per_target:
            D, S = random_disc(X, int(rng.integers(1, 10)), rng)
            if D is None:
                continue
            diagrams.append(("subcomplex", D))
            if len(diagrams) < per_target and rng.random() < 0.5:
                F = seeded_nonreduced(X, S)
                if F is not None:
                    diagrams.append(("filling", F))
        for kind, D in diagrams:
            rows.append({"target": name, "kind": kind, "cells": len(D.cells), "residual": gauss_bonnet_residual(D)})
    worst = max(r["residual"] for r in rows)
    return {"count": len(rows), "max_residual": worst, "passed": len(rows) >= 100 and worst < tol}


@experiment("link-verdicts")
def exp_link_verdicts(seed: int = 0, tol: float = 1e-9) -> dict:
    cases = [
        ("grid", generate("grid", n=4), True, None),
        ("hex", generate("hex", n=2), True, None),
        ("cone3", generate("cone", k=3, n=1), False, 3 * math.pi / 2),
        ("cone5", generate("cone", k=5, n=2), True, 5 * math.pi / 2),
        ("moussong_c4", generate("moussong_ball", L="cycle4", r=2), True, 4 * 2 * math.pi / 3),
    ]
    rows, ok = [], True
    for name, X, want, loop in cases:
        v = check_link_condition(X, tol)
        good = v.passed == want
        if loop is not None:
            good = good and abs(v.loop_length - loop) <= tol
        ok = ok and good
        rows.append({"complex": name, "status": "pass" if v.passed else "fail", "min_loop": v.loop_length,
                     "expected_loop": loop, "ok": good})
    return {"rows": rows, "passed": ok}


@experiment("geodesic-oracle")
def exp_geodesic_oracle(seed: int = 0, pairs: int = 100, h: float = 0.005) -> dict:
    rng = np.random.default_rng(seed)
    cases = {"grid": generate("grid", n=5), "triplane": generate("triplane", R=2), "cone5": generate("cone", k=5, n=2)}
    rows, ok = [], True
    for name, X in cases.items():
        worst_mesh, worst_euclid = 0.0, 0.0
        for _ in range(pairs):
            p, q = random_point(X, rng), random_point(X, rng)
            _, L = geodesic_between(X, p, q)
            m = mesh_distance(X, p, q, h)
            worst_mesh = max(worst_mesh, abs(L - m))
            if name == "grid":
                # grid cell frames are global coordinates
                worst_euclid = max(worst_euclid, abs(L - math.hypot(p.x - q.x, p.y - q.y)))
        good = worst_mesh <= 2 * h and worst_euclid <= 1e-9
        ok = ok and good and len(X.cells) <= 50
        rows.append({"complex": name, "cells": len(X.cells), "max_mesh_gap": worst_mesh,
                     "max_euclid_gap": worst_euclid if name == "grid" else None, "ok": good})
    return {"rows": rows, "h": h, "passed": ok}


@experiment("comparison-probe")
def exp_comparison_probe(seed: int = 0, triangles: int = 50, tol: float = 1e-9) -> dict:
    rng = np.random.default_rng(seed)
    cases = dict(npc_targets())
    cases["triplane"] = generate("triplane", R=2)
    cases["moussong_c4"] = generate("moussong_ball", L="cycle4", r=2)
    rows, ok = [], True
    for name, X in cases.items():
        if not check_link_condition(X).passed:
            raise IsoflatsError(f"{name} is expected to be nonpositively curved")
        worst = 0.0
        for _ in range(triangles):
            tri = tuple(random_point(X, rng) for _ in range(3))
            worst = max(worst, comparison_probe(X, tri, n=8).cat0_violation)
        ok = ok and worst <= tol
        rows.append({"complex": name, "max_violation": worst, "ok": worst <= tol})
    # positively curved cone: triangles straddling the apex
    X3 = generate("cone", k=3, n=1)
    worst3 = 0.0
    for _ in range(triangles):
        tri = tuple(random_point(X3, rng, cells=[X3.cells[i].id]) for i in range(3))
        worst3 = max(worst3, comparison_probe(X3, tri, n=8).cat0_violation)
    rows.append({"complex": "cone3", "max_violation": worst3, "ok": worst3 > 0.01})
    return {"rows": rows, "passed": ok and worst3 > 0.01}


@experiment("reduced-pullback")
def exp_reduced_pullback(seed: int = 0, per_target: int = 12, tol: float = 1e-9) -> dict:
    rng = np.random.default_rng(seed)
    rows, ok = [], True
    for name, X in npc_targets().items():
        made = 0
        for _ in range(10 * per_target):
            if made >= per_target:
                break
            D0, S = random_disc(X, int(rng.integers(2, 9)), rng)
            if D0 is None:
                continue
            F = seeded_nonreduced(X, S)
            if F is None:
                continue
            made += 1
            pair = find_cancelable_pair(F)
            R = reduce_diagram(F)
            kmax = max((R.curvatures()[v] for v in R.interior_vertices()), default=None)
            good = (pair is not None and is_reduced(R) and R.boundary_word() == F.boundary_word()
                    and len(R.cells) < len(F.cells) and (kmax is None or kmax <= tol))
            ok = ok and good
            rows.append({"target": name, "cells_before": len(F.cells), "cells_after": len(R.cells),
                         "pair": list(pair) if pair else None, "max_interior_curvature": kmax, "ok": good})
        ok = ok and made == per_target
    return {"count": len(rows), "rows": rows, "passed": ok}


@experiment("triplane-detection")
def exp_triplane_detection(seed: int = 0) -> dict:
    rows = []
    w = detect_triplane(generate("triplane", R=5), 3.0)
    rows.append({"complex": "triplane5", "R": 3.0, "witness": w is not None, "ok": w is not None})
    for name, X in (("grid", generate("grid", n=6)), ("hex", generate("hex", n=3)),
                    ("moussong_c4", generate("moussong_ball", L="cycle4", r=2))):
        w = detect_triplane(X, 2.0)
        rows.append({"complex": name, "R": 2.0, "witness": w is not None, "ok": w is None})
    return {"rows": rows, "passed": all(r["ok"] for r in rows)}


def _delta_sides(X: Complex2PE) -> list[PLPath]:
    return [meta_path(X, k) for k in ("ba", "ac", "bc")]


@experiment("delta-n-fat")
def exp_delta_n_fat(seed: int = 0, ns=(4, 8, 16), h: float = 0.25) -> dict:
    rows = []
    for n in ns:
        X = generate("delta_n", n=n)
        sides = _delta_sides(X)
        d = thinness(X, sides, h)
        rel = {F.name: relative_thinness(X, sides, F, h).value for F in meta_flats(X)}
        rows.append({"n": n, "delta": d.value, "relative": rel, "uncertainty": d.uncertainty})
    ok = True
    for a, b in zip(rows, rows[1:]):
        ok = ok and b["delta"] >= 1.5 * a["delta"]
        for k in a["relative"]:
            ok = ok and b["relative"][k] >= 1.5 * a["relative"][k]
    return {"rows": rows, "h": h, "passed": ok}


@experiment("delta-n-cert")
def exp_delta_n_cert(seed: int = 0, n: int = 16, L: float = 2.0) -> dict:
    X = generate("delta_n", n=n)
    ba, ac, bc = _delta_sides(X)
    flats = meta_flats(X)
    broken = ba.concat(ac)
    cert = fellow_travel_certificate(X, bc, broken, flats, L)
    self_cert = fellow_travel_certificate(X, bc, bc, flats, 0.0)
    valid = self_cert is not None and validate_certificate(X, bc, bc, flats, self_cert)
    return {
        "n": n,
        "L": L,
        "certificate": cert.to_json() if cert else None,
        "degenerate_certificate": self_cert.to_json() if self_cert else None,
        "passed": cert is None and bool(valid),
    }


def ruffled_family(count: int = 20):
    """Square disc diagrams with cone(5) vertex links, gamma their straight bottom side.

    Half are layered strips (every interior vertex carries five squares);
    the rest are wedge strips, which are flat away from gamma so that
    distances from gamma reach the range where the quadratic bound is
    nonzero at R = 3.
    """
    specs = []
    for i in range(count):
        if i % 2 == 0:
            specs.append(("half_strip", {"N": 3 + i // 2, "m": 1 + (i // 2) % 2}))
        else:
            N = 26 + 2 * (i // 2)
            specs.append(("wedge_strip", {"N": N, "H": N // 2 - 1}))
    out = []
    for kind, params in specs:
        X = generate(kind, **params)
        gv = [p.v for p in meta_path(X, "gamma").points]
        label = kind + "(" + ",".join(str(v) for v in params.values()) + ")"
        out.append((label, whole_complex(X), gv))
    return out


@experiment("divergence")
def exp_divergence(seed: int = 0, brooms: int = 50, diagrams: int = 20, R: float = 3.0,
                   theta: float = math.pi / 2, h: float = 0.05) -> dict:
    rng = np.random.default_rng(seed)
    X = generate("cone", k=5, n=3)
    bs = []
    while len(bs) < brooms:
        tip, x, y = (random_point(X, rng) for _ in range(3))
        bs.append(extract_broom(X, tip, x, y, h))
    broom_margin = min(b.margin for b in bs)
    params = RuffleParams(R, theta)
    rows = []
    for name, D, gv in ruffled_family(diagrams):
        rep = divergence_check(D, gv, params, h=h)
        rows.append({"diagram": name, "alpha_length": rep.alpha_length, "min_margin": rep.min_margin,
                     "max_r": max(r for _, r, *_ in rep.samples),
                     "max_bound": max(b for *_, b, _ in rep.samples), "ok": rep.ok})
    ok = broom_margin >= -1e-6 and all(r["min_margin"] >= -1e-6 for r in rows) and len(rows) == diagrams
    return {"brooms": len(bs), "min_broom_margin": broom_margin,
            "max_branch_angle": max(b.theta for b in bs), "diagrams": rows, "passed": ok}


def _spike_paths(X: Complex2PE, N: int, radius: float, h: float):
    """Paths start -> w -> end for every vertex w near the middle of gamma.

    The window around the middle column is the same up to isometry for
    every N, so the family only grows through the lengths of its legs.
    """
    mid = get_mesh(X, h).field(AtVertex(f"r{N // 2}_0"))
    start, end = meta_point(X, "start"), meta_point(X, "end")
    for v in sorted(X.vertices):
        if mid.distance_to(AtVertex(v)) <= radius:
            yield v, geodesic_through(X, [start, AtVertex(v), end])


@experiment("ruffled-ft")
def exp_ruffled_ft(seed: int = 0, sizes=(10, 20), radius: float = 3.5, h: float = 0.05) -> dict:
    params = QGParams(1.5, 1.0)
    rows = []
    for N in sizes:
        X = generate("half_strip", N=N, m=2)
        D = whole_complex(X)
        gamma = meta_path(X, "gamma")
        gv = [p.v for p in gamma.points]
        if not is_ruffled(D, gv, RuffleParams(3.0, math.pi / 2), beta_counts=False, h=h):
            raise IsoflatsError("strip is not ruffled along gamma")
        dists, tried = [], 0
        for _, P in _spike_paths(X, N, radius, h):
            tried += 1
            if not check_quasigeodesic(X, P, params):
                continue
            T = tame_quasigeodesic(X, P, params)
            dists.append(hausdorff_distance(X, gamma, T.path, h).value)
        rows.append({"N": N, "candidates": tried, "quasigeodesics": len(dists),
                     "L_hat": max(dists) if dists else None})
    ok = all(r["quasigeodesics"] > 0 for r in rows) and all(
        b["L_hat"] <= a["L_hat"] + 2 * h for a, b in zip(rows, rows[1:]))
    return {"rows": rows, "uncertainty": 2 * h, "passed": ok}


@experiment("taming")
def exp_taming(seed: int = 0, count: int = 50, h: float = 0.05) -> dict:
    rng = np.random.default_rng(seed)
    params = QGParams(2.0, 2.0)
    targets = list(npc_targets().items())
    rows, tried = [], 0
    while len(rows) < count and tried < 20 * count:
        tried += 1
        name, X = targets[len(rows) % len(targets)]
        pts = [random_point(X, rng) for _ in range(int(rng.integers(3, 6)))]
        P = geodesic_through(X, pts)
        if P.length < 1.0 or not check_quasigeodesic(X, P, params):
            continue
        T = tame_quasigeodesic(X, P, params)
        ends = (location_to_str(T.path.start) == location_to_str(P.start)
                and location_to_str(T.path.end) == location_to_str(P.end))
        pg = is_piecewise_geodesic(X, T)
        qg = bool(check_quasigeodesic(X, T.path, T.params))
        hd = hausdorff_distance(X, P, T.path, h).value
        good = ends and pg and qg and hd < params.lam + params.eps
        rows.append({"target": name, "length": P.length, "endpoints": ends, "piecewise_geodesic": pg,
                     "qg": qg, "hausdorff": hd, "ok": good})
    ok = len(rows) == count and all(r["ok"] for r in rows)
    return {"count": len(rows), "max_hausdorff": max((r["hausdorff"] for r in rows), default=None),
            "failures": [r for r in rows if not r["ok"]], "passed": ok}


@experiment("psi-table")
def exp_psi_table(seed: int = 0, h: float = 0.05) -> dict:
    tri = []
    for R in (2, 4, 8):
        X = generate("triplane", R=R)
        t = flat_proximity_table(X, meta_flats(X), [1], h)
        tri.append({"R": R, "psi1": t.psi[1.0], "uncertainty": t.uncertainty})
    flap = []
    for n in (4, 8, 16):
        X = generate("flap_grid", n=n, m=2)
        t = flat_proximity_table(X, meta_flats(X), [1], h)
        flap.append({"n": n, "psi1": t.psi[1.0], "uncertainty": t.uncertainty})
    inc = all(b["psi1"] > a["psi1"] for a, b in zip(tri, tri[1:]))
    const = all(abs(r["psi1"] - flap[0]["psi1"]) <= 1e-9 for r in flap)
    return {"triplane": tri, "flap_grid": flap, "passed": inc and const}
