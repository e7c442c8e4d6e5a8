"""Compiled vs pure-Python Dijkstra on Steiner meshes.

    python3 bench/benchmark_mesh.py [--repeat 3]

Prints one line per (complex, h) with the best wall time of each backend,
the speedup and the largest disagreement between the two distance fields.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from isoflats import mesh
from isoflats.complex_core import AtVertex
from isoflats.generators import generate

CASES = [
    ("grid(8)", lambda: generate("grid", n=8), "v0_0"),
    ("cone(5,3)", lambda: generate("cone", k=5, n=3), "v0"),
    ("triplane(4)", lambda: generate("triplane", R=4), "s0"),
    ("hex(3)", lambda: generate("hex", n=3), None),
]


def best_of(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--h", type=float, nargs="*", default=[0.1, 0.05])
    args = ap.parse_args(argv)
    if mesh._kernel is None:
        raise SystemExit("compiled kernel not built; run pip install -e . --no-build-isolation")
    print(f"{'complex':<12} {'h':>6} {'nodes':>8} {'cython s':>10} {'python s':>10} {'speedup':>8} {'max diff':>10}")
    for name, make, v in CASES:
        X = make()
        src = AtVertex(v or X.vertices[0])
        for h in args.h:
            M = mesh.SteinerMesh(X, h)
            tc, fc = best_of(lambda: M.field(src, backend="cython"), args.repeat)
            tp, fp = best_of(lambda: M.field(src, backend="python"), args.repeat)
            diff = float(np.max(np.abs(fc.dist - fp.dist)))
            print(f"{name:<12} {h:>6.3f} {len(fc.dist):>8d} {tc:>10.4f} {tp:>10.4f} {tp / tc:>8.1f} {diff:>10.2e}")


if __name__ == "__main__":
    main()
