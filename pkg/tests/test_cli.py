import json
import math
import subprocess
import sys

import pytest

from conftest import make
from isoflats.cli import dumps, run_command
from isoflats.diagrams import fill_loop
from isoflats.diagrams.model import whole_complex
from isoflats.generators import meta_path


def run(*argv):
    code, text = run_command(list(argv))
    return code, json.loads(text)


@pytest.fixture
def grid_file(write_complex):
    return write_complex(make("grid", n=4), "grid.json")


def test_check_cat0_pass(grid_file):
    code, out = run("check-cat0", grid_file)
    assert code == 0 and out["status"] == "pass"


def test_check_cat0_fail(write_complex):
    code, out = run("check-cat0", write_complex(make("cone", k=3, n=1)))
    assert code == 2
    assert out["loop_length"] == pytest.approx(3 * math.pi / 2)


def test_usage_errors(grid_file, tmp_path):
    assert run("no-such-command")[0] == 1
    assert run("geodesic", grid_file)[0] == 1  # missing --from/--to
    assert run("check-cat0", str(tmp_path / "missing.json"))[0] == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run("check-cat0", str(bad))[0] == 1
    code, out = run("geodesic", grid_file, "--from", "v:v0_0", "--to", "v:nowhere")
    assert code == 1 and out["status"] == "error"


def test_geodesic_length(grid_file):
    code, out = run("geodesic", grid_file, "--from", "v:v0_0", "--to", "v:v3_4")
    assert code == 0
    assert out["length"] == pytest.approx(5.0)


def test_output_is_deterministic(grid_file):
    a = run_command(["geodesic", grid_file, "--from", "v:v0_0", "--to", "v:v3_4"])
    b = run_command(["geodesic", grid_file, "--from", "v:v0_0", "--to", "v:v3_4"])
    assert a == b


def test_dumps_nulls_non_finite():
    assert json.loads(dumps({"a": math.inf, "b": [math.nan, 1.0]})) == {"a": None, "b": [None, 1.0]}


def test_fill_reduce_gauss_bonnet_round_trip(grid_file, tmp_path):
    code, D = run("fill-loop", grid_file, "--loop", "v0_0,v1_0,v2_0,v2_1,v2_2,v1_2,v0_2,v0_1,v0_0")
    assert code == 0 and len(D["cells"]) == 4
    dpath = tmp_path / "d.json"
    dpath.write_text(json.dumps(D))
    code, gb = run("gauss-bonnet", grid_file, str(dpath))
    assert code == 0
    assert gb["curvature_sum"] == pytest.approx(2 * math.pi)
    code, R = run("reduce", grid_file, str(dpath))
    assert code == 0 and R["removed_cells"] == 0


def test_gauss_bonnet_breach_exit_code(grid_file, tmp_path, monkeypatch):
    X = make("grid", n=4)
    D = fill_loop(X, ["v0_0", "v1_0", "v1_1", "v0_1", "v0_0"])
    dpath = tmp_path / "d.json"
    dpath.write_text(json.dumps(D.to_json()))
    import isoflats.diagrams.model as model

    monkeypatch.setattr(model, "gauss_bonnet_residual", lambda D: 1.0)
    code, out = run("reduce", grid_file, str(dpath))
    assert code == 3 and out["error"] == "InvariantBreach"


def test_output_flag_writes_file(grid_file, tmp_path):
    target = tmp_path / "report.json"
    code, out = run("check-cat0", grid_file, "-o", str(target))
    assert code == 0 and out["written"] == str(target)
    assert json.loads(target.read_text())["status"] == "pass"


def test_generate_round_trips(tmp_path):
    code, doc = run("generate", "--kind", "moussong_ball", "--L", "cycle4", "--r", "1")
    assert code == 0
    p = tmp_path / "m.json"
    p.write_text(json.dumps(doc))
    assert run("check-cat0", str(p))[0] == 0
    assert run("generate", "--kind", "grid", "--n", "0")[0] == 1


def test_triplane_commands(write_complex):
    f = write_complex(make("triplane", R=4), "t.json")
    code, out = run("detect-triplane", f, "--R", "2")
    assert code == 0 and out["status"] == "found"
    code, out = run("psi-table", f, "--k", "0,1")
    assert code == 0
    assert out["psi"]["1.0"] == pytest.approx(math.hypot(8, 2), abs=out["uncertainty"])


def test_no_triplane_still_exit_zero(grid_file):
    code, out = run("detect-triplane", grid_file, "--R", "1.5")
    assert code == 0 and out["status"] == "none"


def test_thinness_and_hausdorff(grid_file):
    sides = ["v:v0_0;v:v4_0", "v:v4_0;v:v0_4", "v:v0_4;v:v0_0"]
    code, out = run("thinness", grid_file, *sum((["--side", s] for s in sides), []))
    assert code == 0 and out["value"] == pytest.approx(2.0, abs=out["uncertainty"])
    code, out = run("hausdorff", grid_file, "v:v0_0;v:v4_0", "v:v0_1;v:v4_1")
    assert code == 0 and out["value"] == pytest.approx(1.0, abs=out["uncertainty"])


def test_qg_and_tame(grid_file):
    code, out = run("qg-check", grid_file, "v:v0_0;v:v4_3", "--lambda", "1", "--eps", "0")
    assert code == 0 and out["status"] == "yes"
    code, out = run("qg-check", grid_file, "v:v0_0;v:v0_3;v:v1_3;v:v1_0", "--lambda", "1", "--eps", "0.5")
    assert code == 2
    code, out = run("tame", grid_file, "v:v0_0;v:v0_3;v:v1_3", "--lambda", "1", "--eps", "0")
    assert code == 0 and out["eps"] == pytest.approx(2.0)


def test_ft_cert(grid_file):
    code, out = run("ft-cert", grid_file, "v:v0_0;v:v4_0", "v:v0_0;v:v0_1;v:v4_1;v:v4_0", "--L", "1", "--flats", "find")
    assert code == 0
    code, out = run("ft-cert", grid_file, "v:v0_0;v:v4_0", "v:v0_0;v:v0_1;v:v4_1;v:v4_0", "--L", "0.5", "--flats", "find")
    assert code == 2


def test_ruffled_and_divergence(write_complex, tmp_path):
    X = make("half_strip", N=4, m=1)
    f = write_complex(X, "hs.json")
    dpath = tmp_path / "d.json"
    dpath.write_text(json.dumps(whole_complex(X).to_json()))
    gamma = ",".join(p.v for p in meta_path(X, "gamma").points)
    code, out = run("ruffled", f, str(dpath), "--arc", gamma, "--R", "3", "--theta", str(math.pi / 2))
    assert code == 0 and out["status"] == "yes"
    code, out = run("divergence", f, str(dpath), "--arc", gamma, "--R", "3", "--theta", str(math.pi / 2))
    assert code == 0 and out["status"] == "pass"
    code, out = run("ruffled", f, str(dpath), "--arc", gamma, "--R", "0.2", "--theta", str(math.pi / 2))
    assert code == 2


def test_repro_fast_experiment():
    code, out = run("repro", "link-verdicts")
    assert code == 0 and out["passed"] is True
    assert "seconds" not in out
    assert run("repro", "no-such-experiment")[0] == 1


def test_module_entry_point(grid_file):
    r = subprocess.run([sys.executable, "-m", "isoflats", "check-cat0", grid_file], capture_output=True, text=True)
    assert r.returncode == 0
    assert json.loads(r.stdout)["status"] == "pass"
    r = subprocess.run([sys.executable, "-m", "isoflats", "bogus"], capture_output=True, text=True)
    assert r.returncode == 1 and r.stderr
