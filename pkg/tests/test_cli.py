import csv
import json
import math
import subprocess
import sys
import xml.etree.ElementTree as ET

import pytest

from vibpendulum.cli import main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def json_tail(text: str):
    """The JSON document that ends the output (coeffs prints text lines first)."""
    return json.loads(text[text.index("\n{") + 1:] if not text.startswith("{") else text)


@pytest.fixture
def specs(tmp_path):
    docs = {
        "vertical": {"eta": [[0.0, 1.0]], "epsilon": 0.01, "omega": 2.0},
        "empty": {"epsilon": 0.01},
        "circular": {"xi": [[1.0, 0.0]], "eta": [[0.0, 1.0]], "epsilon": 0.01, "omega": 3.0},
    }
    paths = {}
    for name, doc in docs.items():
        paths[name] = tmp_path / f"{name}.json"
        paths[name].write_text(json.dumps(doc))
    return paths


def test_coeffs(capsys, specs, tmp_path):
    code, out, _ = run(capsys, "coeffs", "--spec", specs["vertical"], "--out", tmp_path / "o")
    assert code == 0
    doc = json_tail(out)
    assert doc["a"] == pytest.approx(1.0, abs=1e-12) and doc["c"] == 0.0
    assert doc["B"] == pytest.approx(1.0) and doc["A"] == 0.0
    assert json.loads((tmp_path / "o" / "coeffs.json").read_text()) == doc
    assert "a = 1\n" in out
    for name in ("empty", "circular"):
        code, out, _ = run(capsys, "coeffs", "--spec", specs[name])
        doc = json_tail(out)
        assert code == 0 and abs(doc["a"]) < 1e-12 and abs(doc["c"]) < 1e-12


def test_coeffs_bad_spec(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"eta": [[0.0, 1.0]],\n "epsilon": "x"}')
    code, out, err = run(capsys, "coeffs", "--spec", bad)
    assert code == 1 and out == ""
    doc = json.loads(err)
    assert doc["command"] == "coeffs" and "epsilon" in doc["message"]
    bad.write_text('{"eta": [[0.0, 1.0]\n "epsilon": 0.1}')
    code, _, err = run(capsys, "coeffs", "--spec", bad)
    assert code == 1 and "line 2" in json.loads(err)["message"]


@pytest.mark.parametrize("a, c, count", [(0, 0, 2), (1, 0, 4), (0, 1.5, 4)])
def test_equilibria_counts(capsys, a, c, count):
    code, out, _ = run(capsys, "equilibria", "--a", a, "--c", c)
    assert code == 0
    eqs = json.loads(out)
    assert len(eqs) == count
    assert all(set(e) >= {"phi", "kind"} for e in eqs)


def test_equilibria_from_spec(capsys, specs):
    code, out, _ = run(capsys, "equilibria", "--spec", specs["vertical"])
    assert code == 0 and len(json.loads(out)) == 4


def test_parameter_source_errors(capsys, specs):
    code, _, err = run(capsys, "equilibria", "--a", 1)
    assert code == 1 and json.loads(err)["error"] == "ValueError"
    code, _, err = run(capsys, "equilibria", "--a", 1, "--c", 0, "--spec", specs["empty"])
    assert code == 1 and "exactly one" in json.loads(err)["message"]
    code, _, err = run(capsys, "equilibria", "--a", "nan", "--c", 0)
    assert code == 1


def test_diagram(capsys, tmp_path):
    code, out, _ = run(capsys, "diagram", "--resolution", 41, "--out", tmp_path / "d1")
    assert code == 0
    summary = json.loads(out)
    assert summary["cusps"] == [[-0.5, 0.0], [0.5, 0.0]]
    rows = list(csv.DictReader((tmp_path / "d1" / "diagram.csv").open()))
    assert len(rows) == 41 * 41
    cell = [r for r in rows if float(r["a"]) == 0.0 and math.isclose(float(r["c"]), 1.2)]
    assert len(cell) == 1 and cell[0]["label"].startswith("II")
    gamma = list(csv.DictReader((tmp_path / "d1" / "gamma.csv").open()))
    pts = {(round(float(r["a"]), 12), round(float(r["c"]), 12)) for r in gamma}
    assert (-0.5, 0.0) in pts and (0.5, 0.0) in pts
    ET.fromstring((tmp_path / "d1" / "diagram.svg").read_bytes())
    run(capsys, "diagram", "--resolution", 41, "--out", tmp_path / "d2")
    for name in ("diagram.csv", "gamma.csv", "diagram.svg"):
        assert (tmp_path / "d1" / name).read_bytes() == (tmp_path / "d2" / name).read_bytes()


def test_diagram_resolution_floor(capsys, tmp_path):
    code, _, err = run(capsys, "diagram", "--resolution", 8, "--out", tmp_path)
    assert code == 1 and json.loads(err)["command"] == "diagram"


def test_portrait_heteroclinic(capsys, tmp_path):
    code, out, _ = run(capsys, "portrait", "--a", 1, "--c", 0, "--out", tmp_path)
    assert code == 0
    doc = json.loads((tmp_path / "signature.json").read_text())
    assert doc == json.loads(out)
    assert doc["region"] == "HETEROCLINIC_RAY"
    assert doc["signature"]["separatrix_topology"] == "heteroclinic_pair"
    assert {s["kind"] for s in doc["separatrices"]} == {"heteroclinic"}
    assert doc["max_energy_residual"] < 1e-6
    ET.fromstring((tmp_path / "portrait.svg").read_bytes())
    header = (tmp_path / "portrait.csv").read_text().splitlines()[0]
    assert header == "component_id,phi,p"


def test_portrait_deterministic(capsys, tmp_path):
    for d in ("p1", "p2"):
        run(capsys, "portrait", "--a", 1, "--c", 0.3, "--out", tmp_path / d)
    for name in ("portrait.svg", "portrait.csv", "signature.json"):
        assert (tmp_path / "p1" / name).read_bytes() == (tmp_path / "p2" / name).read_bytes()


def test_verify_vertical(capsys, specs, tmp_path):
    code, out, _ = run(capsys, "verify", "--spec", specs["vertical"], "--epsilon", "0.04,0.02,0.01",
                       "--workers", 3, "--out", tmp_path)
    assert code == 0
    doc = json.loads((tmp_path / "fixed_points.json").read_text())
    assert doc["checks_passed"] and doc["fit"]["slope"] >= 0.9
    assert doc["max_jacobian_det_error"] < 1e-6
    assert all(len(block["points"]) == 4 for block in doc["fixed_points"])


def test_verify_failure_exit_code(capsys, specs):
    spec = specs["vertical"]
    code, out, err = run(capsys, "verify", "--spec", spec, "--epsilon", "0.04", "--steps", 64)
    assert code == 0  # a single epsilon has no slope to check
    code, _, err = run(capsys, "verify", "--spec", spec, "--epsilon", "0.04,0.04")
    assert code == 2
    doc = json.loads(err)
    assert doc["error"] == "check_failed" and "slope" in doc["message"]


def test_sweep(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("APL_SEED", "7")
    code, out, _ = run(capsys, "sweep", "--box", "0.5,3,-1,1", "--resolution", 64, "--workers", 2,
                       "--random", 20, "--out", tmp_path)
    assert code == 0
    rows = list(csv.reader((tmp_path / "sweep.csv").open()))
    assert rows[0] == ["a", "c", "label"] and len(rows) - 1 == 64 * 64
    assert len(json.loads((tmp_path / "sweep.json").read_text())) == 64 * 64
    sigs = (tmp_path / "signatures.csv").read_text().splitlines()
    assert len(sigs) == 21
    assert json.loads(out) == {"rows": 4096, "seed": 7, "random_points": 20}


def test_bad_box(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["sweep", "--box", "1,0,0,1"])
    assert exc.value.code == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "vibpendulum", "equilibria", "--a", "0", "--c", "0"],
                          capture_output=True, text=True, check=True)
    assert len(json.loads(proc.stdout)) == 2
