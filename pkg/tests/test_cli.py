import json
import subprocess
import sys

import pytest

from crgeo.cli import EXIT_FAIL, EXIT_MODEL, EXIT_OK, EXIT_USAGE, UsageError, main, parse_params
from crgeo.models import builtin, dumps


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_check_soliton_passes(capsys):
    code, out, _ = run(capsys, "check-soliton", "--model", "heisenberg_gaussian", "--mu", "1", "--samples", "64")
    doc = json.loads(out)
    assert code == EXIT_OK and doc["pass"] is True
    assert doc["schema"] == "crgeo-report/1"
    assert doc["tool"]["name"] == "crgeo"
    assert doc["command"] == "check-soliton"
    assert doc["model"]["name"] == "heisenberg_gaussian" and doc["model"]["params"] == {"mu": 1.0}
    assert doc["config"] == {"seed": 7, "samples": 64, "order": 5, "tolerance": None}
    for rep in doc["reports"]:
        for chk in rep["checks"]:
            assert {"name", "identity", "residual", "tolerance", "pass", "seed"} <= set(chk)
            assert chk["seed"] == 7


def test_failing_soliton_file_exits_1(capsys, tmp_path):
    # t^2 is not a soliton potential
    text = dumps(builtin("heisenberg_contact", {"mu": 1.0})).replace('expr = "((2.0*mu)*t)"', 'expr = "t^2"')
    assert 'expr = "t^2"' in text
    path = tmp_path / "bad.model"
    path.write_text(text)
    code, out, err = run(capsys, "check-soliton", "--model-file", str(path), "--samples", "32")
    assert code == EXIT_FAIL and json.loads(out)["pass"] is False
    assert "FAIL" in err


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["validate"],
        ["validate", "--model", "nope"],
        ["frobnicate", "--model", "heisenberg"],
        ["validate", "--model", "heisenberg", "--mu"],
        ["validate", "--model", "heisenberg", "--mu", "one"],
        ["validate", "--model", "heisenberg", "stray"],
        ["validate", "--model", "heisenberg", "--samples", "0"],
        ["curvature", "--model", "heisenberg", "--point", "1,2"],
        ["harnack", "--model", "heisenberg_gaussian", "--mu", "1"],
        ["check-soliton", "--model", "heisenberg"],
    ],
)
def test_usage_errors_exit_2(capsys, argv):
    code, out, _ = run(capsys, *argv)
    assert code == EXIT_USAGE and out == ""


def test_model_errors_exit_3(capsys, tmp_path):
    code, _, err = run(capsys, "validate", "--model", "heisenberg_gaussian")
    assert code == EXIT_MODEL and "mu" in err
    bad = tmp_path / "bad.model"
    bad.write_text("[chart]\ncoords = x,y,t\n")
    code, _, _ = run(capsys, "validate", "--model-file", str(bad))
    assert code == EXIT_MODEL
    code, _, _ = run(capsys, "validate", "--model-file", str(tmp_path / "missing.model"))
    assert code == EXIT_MODEL


def test_parse_params():
    assert parse_params(["--mu", "1.5", "--k=2"]) == {"mu": 1.5, "k": 2.0}
    for bad in (["mu", "1"], ["--mu"], ["--mu", "x"], ["--mu", "inf"], ["--"]):
        with pytest.raises(UsageError):
            parse_params(bad)


def test_curvature_at_a_point(capsys):
    code, out, _ = run(capsys, "curvature", "--model", "cr_sphere", "--point", "0.1,0.2,0.3")
    assert code == EXIT_OK
    vals = json.loads(out)["reports"][0]["values"]
    assert {"A11", "Q", "Q11", "R1", "W", "theta_1^1"} <= set(vals)
    assert vals["W"][0] == pytest.approx(2.0, abs=1e-12)


def test_output_file_and_text(capsys, tmp_path):
    path = tmp_path / "r.json"
    code, out, _ = run(capsys, "validate", "--model", "cr_sphere", "--samples", "16", "--output", str(path))
    assert code == EXIT_OK and out == ""
    assert json.loads(path.read_text())["pass"] is True
    code, out, _ = run(capsys, "validate", "--model", "cr_sphere", "--samples", "16", "--text")
    assert code == EXIT_OK and out.startswith("validate") and "PASS" in out


def test_tolerance_override(capsys):
    code, out, _ = run(capsys, "validate", "--model", "cr_sphere", "--samples", "16", "--tolerance", "1e-30")
    assert code == EXIT_FAIL
    checks = json.loads(out)["reports"][0]["checks"]
    # the finite-difference oracle keeps its own step-limited tolerance
    assert all(c["tolerance"] == 1e-30 for c in checks if c["name"] != "fd_oracle")


def test_level_sets_table(capsys):
    code, out, _ = run(capsys, "level-sets", "--model", "heisenberg_gaussian", "--mu", "1", "--samples", "32", "--level-samples", "16")
    doc = json.loads(out)
    table = doc["reports"][0]["values"]["table"]
    assert [row["level"] for row in table] == [0.5, 1.0, 2.0]
    for row in table:
        assert row["max |K|"] < 1e-7
        assert row["II(E2,E3)"] == pytest.approx(1.0, abs=1e-9)
        assert row["Rm(E2,E3,E2,E3)"] == pytest.approx(1.0, abs=1e-9)
    # the stated Delta phi = Delta_b phi check fails by a factor of two, so the run fails
    assert code == EXIT_FAIL
    failing = {c["identity"] for r in doc["reports"] for c in r["checks"] if not c["pass"]}
    assert failing == {"Delta phi = Delta_b phi"}


def test_critical_set_command(capsys):
    code, out, _ = run(capsys, "critical-set", "--model", "heisenberg_gaussian", "--mu", "1", "--nodes", "17")
    vals = json.loads(out)["reports"][0]["values"]
    assert code == EXIT_OK
    assert len(vals["components"]) == 1 and vals["components"][0]["dimension"] == 1
    assert vals["diffeo"]["case"] == "ii" and vals["diffeo"]["concluded"] == "R^3"


def test_trivial_model_runs_everything(capsys):
    code, out, _ = run(capsys, "all", "--model", "cr_sphere_trivial", "--samples", "32", "--level-samples", "8", "--nodes", "9")
    doc = json.loads(out)
    assert code == EXIT_OK, [(r["title"], r["pass"]) for r in doc["reports"]]
    assert any(r["flags"].get("trivial") for r in doc["reports"])
    # strict JSON: no NaN or Infinity tokens
    assert "NaN" not in out and "Infinity" not in out


def test_json_is_deterministic(capsys, monkeypatch):
    argv = ["all", "--model", "heisenberg_contact", "--mu", "0.5", "--samples", "32"]
    monkeypatch.setenv("CRGEO_THREADS", "1")
    _, a, _ = run(capsys, *argv)
    monkeypatch.setenv("CRGEO_THREADS", "4")
    _, b, _ = run(capsys, *argv)
    assert a == b


def test_console_entry_point(tmp_path):
    out = tmp_path / "r.json"
    proc = subprocess.run(
        [sys.executable, "-m", "crgeo.cli", "validate", "--model", "heisenberg", "--samples", "8", "--output", str(out)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert json.loads(out.read_text())["pass"] is True
    assert "validate heisenberg: PASS" in proc.stderr
