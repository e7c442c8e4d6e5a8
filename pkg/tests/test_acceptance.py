"""End-to-end acceptance checks, one per criterion.

Each test runs the named experiment, re-checks its numbers against the
thresholds here (rather than trusting the experiment's own verdict), and
prints a single PASS/FAIL line.  Run directly with ``python3 tests/test_acceptance.py``
for just the summary lines.
"""
import math
import sys

import pytest

from isoflats.experiments import run

TWO_H_MESH = 2 * 0.005


def _report(capsys, num, title, ok, detail):
    line = f"[criterion {num:2d}] {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    if capsys is None:
        print(line)
    else:
        with capsys.disabled():
            print("\n" + line)


def c1():
    r = run("gauss-bonnet")
    ok = r["count"] >= 100 and r["max_residual"] < 1e-9 and r["seconds"] < 30
    return ok, f"{r['count']} diagrams, max residual {r['max_residual']:.2e}, {r['seconds']:.1f}s"


def c2():
    r = run("link-verdicts")
    want = {"grid": ("pass", None), "hex": ("pass", None), "cone3": ("fail", 3 * math.pi / 2),
            "cone5": ("pass", 5 * math.pi / 2), "moussong_c4": ("pass", 8 * math.pi / 3)}
    ok = True
    for row in r["rows"]:
        status, loop = want[row["complex"]]
        ok = ok and row["status"] == status
        if loop is not None:
            ok = ok and abs(row["min_loop"] - loop) <= 1e-9
    ok = ok and {row["complex"] for row in r["rows"]} == set(want)
    return ok, ", ".join(f"{row['complex']}={row['status']}" for row in r["rows"])


def c3():
    r = run("geodesic-oracle")
    h = r["h"]
    ok = h == 0.005 and r["seconds"] < 120
    for row in r["rows"]:
        ok = ok and row["cells"] <= 50 and row["max_mesh_gap"] <= 2 * h
        if row["complex"] == "grid":
            ok = ok and row["max_euclid_gap"] <= 1e-9
    gaps = ", ".join(f"{row['complex']} {row['max_mesh_gap']:.1e}" for row in r["rows"])
    return ok, f"mesh gaps {gaps} (limit {2 * h}), {r['seconds']:.1f}s"


def c4():
    r = run("comparison-probe")
    ok = True
    for row in r["rows"]:
        if row["complex"] == "cone3":
            ok = ok and row["max_violation"] > 0.01
        else:
            ok = ok and row["max_violation"] <= 1e-9
    return ok, ", ".join(f"{row['complex']} {row['max_violation']:.2e}" for row in r["rows"])


def c5():
    r = run("reduced-pullback")
    ok = r["count"] > 0
    for row in r["rows"]:
        k = row["max_interior_curvature"]
        ok = ok and row["pair"] is not None and row["ok"] and (k is None or k <= 1e-9)
    return ok, f"{r['count']} seeded fixtures reduced"


def c6():
    r = run("triplane-detection")
    want = {"triplane5": True, "grid": False, "hex": False, "moussong_c4": False}
    ok = {row["complex"]: row["witness"] for row in r["rows"]} == want
    return ok, ", ".join(f"{row['complex']} witness={row['witness']}" for row in r["rows"])


def c7():
    r = run("delta-n-fat")
    rows = r["rows"]
    ok = [row["n"] for row in rows] == [4, 8, 16] and r["seconds"] < 120
    for a, b in zip(rows, rows[1:]):
        ok = ok and b["delta"] >= 1.5 * a["delta"]
        for k in a["relative"]:
            ok = ok and b["relative"][k] >= 1.5 * a["relative"][k]
    return ok, "delta(n) = " + ", ".join(f"{row['delta']:.2f}" for row in rows) + f", {r['seconds']:.1f}s"


def c8():
    r = run("delta-n-cert")
    ok = r["n"] == 16 and r["L"] == 2.0 and r["certificate"] is None and r["degenerate_certificate"] is not None and r["passed"]
    return ok, f"n=16 L=2 certificate={r['certificate']}, degenerate certificate valid={r['passed']}"


def c9():
    r = run("divergence")
    ok = r["brooms"] >= 50 and r["min_broom_margin"] >= -1e-6 and len(r["diagrams"]) >= 20
    ok = ok and all(row["min_margin"] >= -1e-6 for row in r["diagrams"])
    worst = min(row["min_margin"] for row in r["diagrams"])
    return ok, f"broom margin {r['min_broom_margin']:.3f}, diagram margin {worst:.3f}"


def c10():
    r = run("ruffled-ft")
    rows = r["rows"]
    ok = [row["N"] for row in rows] == [10, 20] and all(row["L_hat"] is not None for row in rows)
    ok = ok and rows[1]["L_hat"] <= rows[0]["L_hat"] + r["uncertainty"]
    return ok, "L_hat " + " -> ".join(f"{row['L_hat']:.3f}" for row in rows)


def c11():
    r = run("taming")
    ok = r["count"] == 50 and not r["failures"] and r["passed"]
    return ok, f"{r['count']} paths, max Hausdorff {r['max_hausdorff']:.3f}"


def c12():
    r = run("psi-table")
    tri = [row["psi1"] for row in r["triplane"]]
    flap = [row["psi1"] for row in r["flap_grid"]]
    ok = all(b > a for a, b in zip(tri, tri[1:])) and all(abs(x - flap[0]) <= 1e-9 for x in flap)
    return ok, f"triplane {[round(x, 3) for x in tri]}, flap_grid {flap}"


CRITERIA = [
    (1, "Gauss-Bonnet", c1),
    (2, "link verdicts", c2),
    (3, "geodesic oracle", c3),
    (4, "comparison probe", c4),
    (5, "reduced pullback", c5),
    (6, "triplane detection", c6),
    (7, "delta_n fatness", c7),
    (8, "delta_n certificate", c8),
    (9, "divergence bounds", c9),
    (10, "ruffled fellow traveller", c10),
    (11, "taming contract", c11),
    (12, "psi monotonicity", c12),
]


@pytest.mark.acceptance
@pytest.mark.parametrize("num,title,fn", CRITERIA, ids=[f"c{n:02d}" for n, _, _ in CRITERIA])
def test_criterion(num, title, fn, capsys):
    ok, detail = fn()
    _report(capsys, num, title, ok, detail)
    assert ok, detail


if __name__ == "__main__":
    bad = 0
    for num, title, fn in CRITERIA:
        ok, detail = fn()
        _report(None, num, title, ok, detail)
        bad += not ok
    sys.exit(1 if bad else 0)
