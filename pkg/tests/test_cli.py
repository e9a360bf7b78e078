import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from pwlab.cli import main


def run(tmp_path, *argv, sub="out"):
    out = tmp_path / sub
    code = main([*argv, "--out", str(out)])
    return code, out


def test_limit_sphere2_csv(tmp_path):
    code, out = run(tmp_path, "limit", "--scenario", "sphere-2")
    assert code == 0
    rows = list(csv.reader((out / "profile.csv").open()))
    assert rows[0] == ["t", "A_11"] and rows[1] == ["eps", "1"]
    vals = np.array([float(r[1]) for r in rows[2:]])
    assert np.max(np.abs(vals + 1.0)) < 1e-7
    # 17 significant digits
    assert any(len(r[0].replace(".", "").replace("-", "").lstrip("0")) >= 15 for r in rows[3:])
    meta = json.loads((out / "limit_metric.json").read_text())
    assert meta["coordinates"] == ["v", "t", "x1"] and meta["index"] == 1
    assert "stage" in meta["provenance"]


def test_limit_flat_and_pp_example(tmp_path):
    code, out = run(tmp_path, "limit", "--scenario", "flat-3", sub="flat")
    assert code == 0
    rows = list(csv.reader((out / "profile.csv").open()))
    assert all(float(c) == 0.0 for r in rows[2:] for c in r[1:])
    code, out = run(tmp_path, "limit", "--scenario", "pp-example-ssmm", sub="pp")
    rows = list(csv.reader((out / "profile.csv").open()))
    assert rows[1][:3] == ["eps", "-1", "1"]
    A = np.array([[float(c) for c in r[1:]] for r in rows[2:]])
    assert np.max(np.abs(A - [-1.0, 0.0, 0.0, -1.0])) < 1e-9


def test_conjugate_outputs(tmp_path):
    code, out = run(tmp_path, "conjugate", "--scenario", "pp-example-ssmm")
    assert code == 0
    rep = json.loads((out / "conjugate.json").read_text())
    pts = [(p["t"], p["multiplicity"]) for p in rep["points"]]
    assert [m for _, m in pts] == [2, 2]
    assert abs(pts[0][0] - math.pi) < 1e-6 and abs(pts[1][0] - 2 * math.pi) < 1e-6
    assert rep["total"] == 4 and rep["index_bound"] == 8 and rep["morse_bound_holds"]
    assert (out / "conjugate_scan.csv").read_text().startswith("t,sigma_min\n")


def test_conjugate_flat_and_sphere3(tmp_path):
    code, out = run(tmp_path, "conjugate", "--scenario", "flat-3", sub="flat")
    assert code == 0 and json.loads((out / "conjugate.json").read_text())["points"] == []
    code, out = run(tmp_path, "conjugate", "--scenario", "sphere-3", "--span",
                    f"0:{1.5 * math.pi}", sub="s3")
    pts = json.loads((out / "conjugate.json").read_text())["points"]
    assert len(pts) == 1 and pts[0]["multiplicity"] == 2
    assert abs(pts[0]["t"] - math.pi) < 1e-6


def test_classify(tmp_path):
    code, out = run(tmp_path, "classify", "--scenario", "sphere-3")
    flags = json.loads((out / "classification.json").read_text())["flags"]
    assert code == 0
    assert flags["conformally_flat"]["value"] and not flags["ricci_flat"]["value"]
    code, out = run(tmp_path, "classify", "--scenario", "pp-ricci-flat", sub="rf")
    report = json.loads((out / "classification.json").read_text())
    assert report["path"] == "general" and report["flags"]["ricci_flat"]["value"]


def test_verify_items(tmp_path):
    code, out = run(tmp_path, "verify", "--scenario", "sphere-2", "--item", "ii")
    rep = json.loads((out / "verify.json").read_text())
    assert code == 0 and rep["pass"] and rep["label"] == "evidence"
    assert len(rep["geodesics"]) == 16
    assert all(g["limit_value"] for g in rep["geodesics"])
    code, out = run(tmp_path, "verify", "--scenario", "flat-3", "--item", "i", sub="flat")
    assert json.loads((out / "verify.json").read_text())["pass"]


def test_verify_focusing(tmp_path):
    code, out = run(tmp_path, "verify", "--scenario", "pp-example-ssmm", "--item", "focusing")
    rep = json.loads((out / "verify.json").read_text())
    assert code == 0 and rep["verdict"] == "consistent"
    assert abs(rep["pair"][1] - math.pi) < 1e-6


def test_rosen_and_flow_from_config(tmp_path):
    cfg = tmp_path / "rosen.toml"
    cfg.write_text('[rosen]\ncomponents = [["cos(t)^2"]]\nspan = [0.0, 1.2]\n')
    code, out = run(tmp_path, "rosen2brinkmann", "--config", str(cfg))
    assert code == 0
    rows = list(csv.reader((out / "profile.csv").open()))
    assert max(abs(float(r[1]) + 1.0) for r in rows[2:]) < 1e-6
    code, out = run(tmp_path, "flowprofile", "--scenario", "radial-3", sub="flow")
    rep = json.loads((out / "flowprofile.json").read_text())
    assert code == 0 and rep["riccati_residual"] < 1e-5


def test_inline_metric_config(tmp_path):
    cfg = tmp_path / "polar.toml"
    cfg.write_text(
        '[metric]\ncomponents = [["1", "0"], ["0", "sin(th)^2"]]\nnames = ["th", "ph"]\n'
        'base_point = [1.0, 0.0]\n'
        '[geodesic]\nx0 = [1.0, 0.0]\nv0 = [1.0, 0.0]\nspan = [0.0, 1.5]\n')
    code, out = run(tmp_path, "limit", "--config", str(cfg))
    assert code == 0
    rows = list(csv.reader((out / "profile.csv").open()))
    assert max(abs(float(r[1]) + 1.0) for r in rows[2:]) < 1e-7


def test_byte_identical_outputs(tmp_path):
    for sub in ("a", "b"):
        assert run(tmp_path, "conjugate", "--scenario", "pp-example-ssmm", sub=sub)[0] == 0
        assert run(tmp_path, "limit", "--scenario", "torus", sub=sub + "l")[0] == 0
    for name in ("conjugate.json", "conjugate_scan.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    for name in ("profile.csv", "profile.json", "limit_metric.json"):
        assert (tmp_path / "al" / name).read_bytes() == (tmp_path / "bl" / name).read_bytes()


@pytest.mark.parametrize("argv", [
    ["limit", "--scenario", "no-such-space"],
    ["limit", "--config", "/nonexistent.toml"],
    ["verify", "--scenario", "flat-3", "--item", "ix"],
    ["limit", "--scenario", "flat-3", "--span", "0-1"],
    ["rosen2brinkmann"],
])
def test_config_errors_exit_2(tmp_path, argv, capsys):
    assert run(tmp_path, *argv)[0] == 2
    assert "config error" in capsys.readouterr().err


def test_bad_toml_exit_2(tmp_path):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("scenario = \n")
    assert run(tmp_path, "limit", "--config", str(cfg))[0] == 2


def test_numerical_failure_exit_3(tmp_path, capsys):
    # mixed-sign cross slot: conjugate point search refuses
    cfg = tmp_path / "dep.toml"
    cfg.write_text(
        '[metric]\ncomponents = [["0", "1", "0", "0"], ["1", "x^2-y^2+2*x*y", "0", "0"],'
        ' ["0", "0", "-1", "0"], ["0", "0", "0", "1"]]\nnames = ["v", "t", "x", "y"]\n'
        '[geodesic]\nx0 = [0, 0, 0, 0]\nv0 = [0, 1, 0, 0]\nspan = [0.0, 3.0]\n')
    assert run(tmp_path, "conjugate", "--config", str(cfg))[0] == 3
    assert "CausalDependenceError" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "pwlab", "limit", "--scenario", "nowhere",
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 2
    proc = subprocess.run([sys.executable, "-m", "pwlab", "limit", "--scenario", "flat-2",
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["result"]["status"] == "ok"
