"""Command-line interface.

Every subcommand prints one JSON report.  Exit codes: 0 ok, 1 usage or
input error, 2 negative verdict, 3 internal invariant breach.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

from .complex_core import PLPath, load_complex, parse_location, serialize
from .errors import InvariantBreach, IsoflatsError

OK, USAGE, VERDICT, BREACH = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _clean(x):
    """JSON-safe copy: non-finite floats become null, tuples become lists."""
    if isinstance(x, float):
        return x if math.isfinite(x) else None
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if hasattr(x, "item") and callable(x.item):  # numpy scalars
        return _clean(x.item())
    return x


def dumps(report: dict) -> str:
    return json.dumps(_clean(report), sort_keys=True, indent=2, allow_nan=False)


# ----------------------------------------------------------------------------
# argument helpers


def _complex(path):
    return load_complex(path)


def _diagram(X, path):
    from .diagrams import DiscDiagram

    return DiscDiagram.from_json(X, path)


def _path(X, spec: str) -> PLPath:
    """``meta:NAME``, a path JSON file, or ';'-separated locations joined by geodesics."""
    from .geodesics import geodesic_through

    if spec.startswith("meta:"):
        from .generators import meta_path

        try:
            return meta_path(X, spec[5:])
        except KeyError:
            raise UsageError(f"complex has no path named {spec[5:]!r}") from None
    if spec.endswith(".json"):
        with open(spec) as fh:
            doc = json.load(fh)
        return PLPath(X, [parse_location(s) for s in doc["breakpoints"]], [X.cidx[c] for c in doc["cells"]])
    pts = [_location(X, s) for s in spec.split(";") if s.strip()]
    if not pts:
        raise UsageError("empty path")
    return geodesic_through(X, pts)


def _location(X, text: str):
    text = text.strip()
    if text.startswith("meta:"):
        from .generators import meta_point

        try:
            return meta_point(X, text[5:])
        except KeyError:
            raise UsageError(f"complex has no point named {text[5:]!r}") from None
    return parse_location(text)


def _flats(X, names: str | None):
    from .flats import find_flats, meta_flats

    if names in (None, "meta"):
        fl = meta_flats(X)
        return fl if fl else find_flats(X)
    if names == "find":
        return find_flats(X)
    pick = set(names.split(","))
    fl = [F for F in meta_flats(X) if F.name in pick]
    missing = pick - {F.name for F in fl}
    if missing:
        raise UsageError(f"unknown flats: {sorted(missing)}")
    return fl


def _arc(text: str):
    """``start:count`` boundary positions, or comma-separated vertex ids."""
    if ":" in text and text.replace(":", "").isdigit():
        a, b = text.split(":")
        return (int(a), int(b))
    return [v for v in text.split(",") if v]


def _loop(text: str):
    items = [t for t in text.replace(";", ",").split(",") if t]
    return items


# ----------------------------------------------------------------------------
# subcommands


def cmd_check_cat0(a):
    from .link_analysis import check_link_condition

    v = check_link_condition(_complex(a.complex), a.tol)
    return v.to_json(), OK if v.passed else VERDICT


def cmd_geodesic(a):
    from .geodesics import geodesic_between

    X = _complex(a.complex)
    P, L = geodesic_between(X, _location(X, a.src), _location(X, a.dst), a.h)
    out = P.to_json()
    out["length"] = L
    return out, OK


def cmd_probe_triangle(a):
    from .geodesics import comparison_probe

    X = _complex(a.complex)
    tri = tuple(_location(X, s) for s in a.points)
    rep = comparison_probe(X, tri, n=a.samples, h=a.h)
    out = rep.to_json()
    ok = rep.cat0_violation <= a.tol
    out["status"] = "pass" if ok else "fail"
    return out, OK if ok else VERDICT


def cmd_fill_loop(a):
    from .diagrams.build import fill_loop

    X = _complex(a.complex)
    D = fill_loop(X, _loop(a.loop), max_cells=a.max_cells)
    if a.reduce:
        from .diagrams.reduce import reduce_diagram

        D = reduce_diagram(D)
    _gb_guard(D, a.tol)
    return D.to_json(), OK


def _gb_guard(D, tol):
    from .diagrams.model import gauss_bonnet_residual

    r = gauss_bonnet_residual(D)
    if r >= max(tol, 1e-9):
        raise InvariantBreach(f"Gauss-Bonnet residual {r:.3e}")


def cmd_reduce(a):
    from .diagrams.reduce import find_cancelable_pair, reduce_diagram

    X = _complex(a.complex)
    D = _diagram(X, a.diagram)
    before = len(D.cells)
    pair = find_cancelable_pair(D)
    R = reduce_diagram(D)
    _gb_guard(R, a.tol)
    out = R.to_json()
    out["removed_cells"] = before - len(R.cells)
    out["first_pair"] = list(pair) if pair else None
    return out, OK


def cmd_gauss_bonnet(a):
    from .diagrams.model import gauss_bonnet_residual

    X = _complex(a.complex)
    D = _diagram(X, a.diagram)
    r = gauss_bonnet_residual(D)
    out = {
        "curvature_sum": math.fsum(D.curvatures().values()),
        "euler_characteristic": D.euler_characteristic(),
        "residual": r,
        "status": "pass" if r < a.tol else "fail",
    }
    return out, OK if r < a.tol else BREACH


def cmd_ruffled(a):
    from .diagrams.geometry import RuffleParams, is_ruffled

    X = _complex(a.complex)
    D = _diagram(X, a.diagram)
    v = is_ruffled(D, _arc(a.arc), RuffleParams(a.R, a.theta), h=a.h)
    return v.to_json(), OK if v.ruffled else VERDICT


def cmd_find_flats(a):
    from .flats import find_flats

    X = _complex(a.complex)
    fl = find_flats(X, a.rmin, a.h)
    return {"flats": [F.to_json() for F in fl], "count": len(fl)}, OK


def cmd_detect_triplane(a):
    from .flats import detect_triplane

    X = _complex(a.complex)
    w = detect_triplane(X, a.R, a.h)
    if w is None:
        return {"status": "none", "R": a.R}, OK
    return {"status": "found", "R": a.R, "witness": w.to_json()}, OK


def cmd_psi_table(a):
    from .flats import flat_proximity_table

    X = _complex(a.complex)
    ks = [float(k) for k in a.k.split(",") if k]
    t = flat_proximity_table(X, _flats(X, a.flats), ks, a.h)
    return t.to_json(), OK


def _three(X, specs):
    if len(specs) != 3:
        raise UsageError("a triangle needs exactly three --side paths")
    return [_path(X, s) for s in specs]


def cmd_thinness(a):
    from .rel_hyp import thinness

    X = _complex(a.complex)
    return thinness(X, _three(X, a.side), a.h).to_json(), OK


def cmd_rel_thinness(a):
    from .rel_hyp import relative_thinness

    X = _complex(a.complex)
    F = _flats(X, a.flat)
    if len(F) != 1:
        raise UsageError("--flat must name exactly one flat")
    out = relative_thinness(X, _three(X, a.side), F[0], a.h).to_json()
    out["flat"] = F[0].name
    return out, OK


def cmd_hausdorff(a):
    from .rel_hyp import hausdorff_distance

    X = _complex(a.complex)
    return hausdorff_distance(X, _path(X, a.path[0]), _path(X, a.path[1]), a.h).to_json(), OK


def cmd_qg_check(a):
    from .rel_hyp import QGParams, check_quasigeodesic

    X = _complex(a.complex)
    v = check_quasigeodesic(X, _path(X, a.path), QGParams(a.lam, a.eps), mesh_h=a.h)
    out = v.to_json()
    out["uncertainty"] = 2 * a.h
    return out, OK if v.ok else VERDICT


def cmd_tame(a):
    from .rel_hyp import QGParams, tame_quasigeodesic

    X = _complex(a.complex)
    T = tame_quasigeodesic(X, _path(X, a.path), QGParams(a.lam, a.eps), a.h)
    return T.to_json(), OK


def cmd_ft_cert(a):
    from .rel_hyp import fellow_travel_certificate

    X = _complex(a.complex)
    P, Q = _path(X, a.path[0]), _path(X, a.path[1])
    c = fellow_travel_certificate(X, P, Q, _flats(X, a.flats), a.L)
    if c is None:
        return {"status": "none", "L": a.L}, VERDICT
    out = c.to_json()
    out["status"] = "certified"
    return out, OK


def cmd_divergence(a):
    from .diagrams.geometry import RuffleParams
    from .errors import PreconditionRuffleFailed
    from .rel_hyp import divergence_check

    X = _complex(a.complex)
    D = _diagram(X, a.diagram)
    try:
        rep = divergence_check(D, _arc(a.arc), RuffleParams(a.R, a.theta), h=a.h)
    except PreconditionRuffleFailed as exc:
        return {"status": "not_ruffled", "message": str(exc)}, VERDICT
    # a violated bound contradicts a theorem, so it is a bug, not a finding
    return rep.to_json(), OK if rep.ok else BREACH


_GEN_PARAMS = ("n", "m", "k", "r", "R", "N", "H", "q", "spacing")


def cmd_generate(a):
    from .generators import generate

    params = {p: getattr(a, "gen_" + p) for p in _GEN_PARAMS if getattr(a, "gen_" + p) is not None}
    if a.L is not None:
        params["L"] = a.L
    return serialize(generate(a.kind, **params)), OK


def cmd_repro(a):
    from .experiments import REGISTRY, run

    if a.experiment not in REGISTRY:
        raise UsageError(f"unknown experiment {a.experiment!r}; choose from {sorted(REGISTRY)}")
    out = run(a.experiment, seed=a.seed)
    out.pop("seconds", None)  # keep reports byte-stable
    return out, OK if out["passed"] else VERDICT


# ----------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--h", type=float, default=0.05, help="mesh spacing")
    common.add_argument("--tol", type=float, default=1e-9)
    common.add_argument("--max-cells", type=int, default=64)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("-o", "--output", help="write the report here instead of stdout")

    p = _Parser(prog="isoflats", description="Geometry of nonpositively curved 2-complexes.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, fn, help):
        s = sub.add_parser(name, parents=[common], help=help)
        s.set_defaults(fn=fn)
        return s

    s = add("check-cat0", cmd_check_cat0, "link condition at every vertex")
    s.add_argument("complex")

    s = add("geodesic", cmd_geodesic, "geodesic between two locations")
    s.add_argument("complex")
    s.add_argument("--from", dest="src", required=True)
    s.add_argument("--to", dest="dst", required=True)

    s = add("probe-triangle", cmd_probe_triangle, "sampled CAT(0) comparison for a triangle")
    s.add_argument("complex")
    s.add_argument("points", nargs=3)
    s.add_argument("--samples", type=int, default=16)

    s = add("fill-loop", cmd_fill_loop, "least-area disc diagram for an edge loop")
    s.add_argument("complex")
    s.add_argument("--loop", required=True, help="vertex ids, or signed edge ids, comma separated")
    s.add_argument("--reduce", action="store_true")

    for name, fn, help in (("reduce", cmd_reduce, "cancel pairs until reduced"),
                           ("gauss-bonnet", cmd_gauss_bonnet, "curvature sum against 2 pi chi")):
        s = add(name, fn, help)
        s.add_argument("complex")
        s.add_argument("diagram")

    for name, fn, help in (("ruffled", cmd_ruffled, "(R, theta)-ruffle test along a boundary arc"),
                           ("divergence", cmd_divergence, "quadratic divergence bound along a ruffled arc")):
        s = add(name, fn, help)
        s.add_argument("complex")
        s.add_argument("diagram")
        s.add_argument("--arc", required=True, help="start:count or comma-separated vertex ids")
        s.add_argument("--R", type=float, required=True)
        s.add_argument("--theta", type=float, required=True)

    s = add("find-flats", cmd_find_flats, "maximal flat discs")
    s.add_argument("complex")
    s.add_argument("--rmin", type=float, default=None)

    s = add("detect-triplane", cmd_detect_triplane, "search for an embedded triplane of radius R")
    s.add_argument("complex")
    s.add_argument("--R", type=float, required=True)

    s = add("psi-table", cmd_psi_table, "diameters of intersections of flat neighbourhoods")
    s.add_argument("complex")
    s.add_argument("--k", default="0,1,2")
    s.add_argument("--flats", default="meta")

    s = add("thinness", cmd_thinness, "thinness of a geodesic triangle")
    s.add_argument("complex")
    s.add_argument("--side", action="append", default=[], required=True)

    s = add("rel-thinness", cmd_rel_thinness, "thinness relative to one flat")
    s.add_argument("complex")
    s.add_argument("--side", action="append", default=[], required=True)
    s.add_argument("--flat", required=True)

    s = add("hausdorff", cmd_hausdorff, "Hausdorff distance between two paths")
    s.add_argument("complex")
    s.add_argument("path", nargs=2)

    for name, fn, help in (("qg-check", cmd_qg_check, "quasigeodesic inequalities on samples"),
                           ("tame", cmd_tame, "piecewise geodesic taming of a quasigeodesic")):
        s = add(name, fn, help)
        s.add_argument("complex")
        s.add_argument("path")
        s.add_argument("--lambda", dest="lam", type=float, required=True)
        s.add_argument("--eps", type=float, required=True)

    s = add("ft-cert", cmd_ft_cert, "fellow-travel certificate relative to flats")
    s.add_argument("complex")
    s.add_argument("path", nargs=2)
    s.add_argument("--L", type=float, required=True)
    s.add_argument("--flats", default="meta")

    s = add("generate", cmd_generate, "build an example complex")
    s.add_argument("--kind", required=True)
    for prm in _GEN_PARAMS:
        s.add_argument(f"--{prm}", dest="gen_" + prm, type=int, default=None)
    s.add_argument("--L", default=None, help="link graph for moussong_ball, e.g. cycle4")

    s = add("repro", cmd_repro, "run a named experiment end to end")
    s.add_argument("experiment")
    return p


def run_command(argv) -> tuple[int, str]:
    """Parse and run; returns (exit code, JSON text)."""
    try:
        args = build_parser().parse_args(argv)
        if not getattr(args, "command", None):
            raise UsageError("missing subcommand")
        report, code = args.fn(args)
    except UsageError as exc:
        return USAGE, dumps({"status": "error", "error": "usage", "message": str(exc)})
    except InvariantBreach as exc:
        return BREACH, dumps({"status": "error", "error": type(exc).__name__, "message": str(exc)})
    except (IsoflatsError, OSError, json.JSONDecodeError) as exc:
        return USAGE, dumps({"status": "error", "error": type(exc).__name__, "message": str(exc)})
    text = dumps(report)
    if getattr(args, "output", None):
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
        text = dumps({"status": report.get("status", "ok") if isinstance(report, dict) else "ok",
                      "written": args.output})
    return code, text


def main(argv=None) -> int:
    code, text = run_command(sys.argv[1:] if argv is None else argv)
    out = sys.stderr if code == USAGE else sys.stdout
    print(text, file=out)
    return code


if __name__ == "__main__":
    sys.exit(main())
