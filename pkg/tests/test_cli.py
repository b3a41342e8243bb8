import json
import subprocess
import sys

import pytest

from vertexlab.cli import main
from vertexlab.core import ModelParams, params_to_config


@pytest.fixture()
def config(tmp_path):
    p = ModelParams(
        q=0.5,
        u=(-1.0, -0.8, -1.2),
        a=(1.0, 0.9, 1.1, 0.95),
        nu=(0.0, 0.3, 0.4, 0.25),
    )
    path = tmp_path / "params.json"
    path.write_text(params_to_config(p))
    return str(path)


def test_usage_error_exit_code():
    proc = subprocess.run(
        [sys.executable, "-m", "vertexlab.cli", "no-such-command"],
        capture_output=True,
    )
    assert proc.returncode == 2


def test_sample_vertex(config, tmp_path, capsys):
    out = tmp_path / "out"
    code = main(
        [
            "sample-vertex",
            "--config", config,
            "--window", "4,3",
            "--seed", "7",
            "--out", str(out),
        ]
    )
    assert code == 0
    lines = (out / "heights.csv").read_text().splitlines()
    assert lines[0] == "N,T,h"
    assert len(lines) == 1 + 5 * 4


def test_seed_env_override(config, tmp_path, monkeypatch):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    main(["sample-vertex", "--config", config, "--window", "4,3",
          "--seed", "1", "--out", str(out1)])
    monkeypatch.setenv("VERTEXLAB_SEED", "1")
    main(["sample-vertex", "--config", config, "--window", "4,3",
          "--seed", "999", "--out", str(out2)])
    assert (out1 / "heights.csv").read_text() == (out2 / "heights.csv").read_text()


def test_sample_qtasep(config, tmp_path):
    out = tmp_path / "out"
    code = main(
        ["sample-qtasep", "--config", config, "--path", "TNT",
         "--seed", "3", "--out", str(out)]
    )
    assert code == 0
    lines = (out / "trajectory.jsonl").read_text().strip().splitlines()
    assert len(lines) == 4
    rec = json.loads(lines[0])
    assert rec["N"] == 1 and rec["T"] == 0 and rec["X_value"] == 0


def test_couple_check(config, tmp_path):
    out = tmp_path / "out"
    code = main(
        ["couple-check", "--config", config, "--path", "TN", "--out", str(out)]
    )
    assert code == 0
    doc = json.loads((out / "couple_check.json").read_text())
    assert doc["pass"] and doc["tv_distance"] <= 1e-8


def test_moments_routes(config, tmp_path):
    out = tmp_path / "out"
    code = main(
        ["moments", "--config", config, "--n-list", "2,1", "--T", "2",
         "--route", "all", "--out", str(out)]
    )
    assert code == 0
    recs = [json.loads(x) for x in (out / "moments.jsonl").read_text().strip().splitlines()]
    assert {r["method"] for r in recs} == {"residues", "quadrature", "operator"}
    vals = [r["value"] for r in recs if r["formula"] == "product-moment"]
    assert abs(vals[0] - vals[1]) < 1e-9


def test_diffops_check_cli(tmp_path):
    out = tmp_path / "out"
    code = main(["diffops-check", "--seed", "4", "--out", str(out)])
    assert code == 0
    doc = json.loads((out / "diffops_check.json").read_text())
    assert doc["pass"] and doc["check"] == "operator-lemma"


def test_schur_cli(tmp_path):
    out = tmp_path / "out"
    code = main(
        ["schur", "--mode", "fredholm", "--u", "-2.0", "--a1", "1.2",
         "--N", "2", "--T", "2", "--out", str(out)]
    )
    assert code == 0
    doc = json.loads((out / "schur_fredholm.json").read_text())
    assert abs(doc["2"] - 1.0) < 1e-8


def test_asymptotics_cli(tmp_path):
    out = tmp_path / "out"
    code = main(
        ["asymptotics", "--m-list", "30", "--replicas", "40",
         "--seed", "2", "--out", str(out)]
    )
    assert code == 0
    assert (out / "asymptotics.csv").read_text().startswith("M,replica")
    doc = json.loads((out / "asymptotics_summary.json").read_text())
    assert "X_theory" in doc and "ks_stat" in doc


def test_verify_subset(tmp_path, capsys):
    spec = tmp_path / "suite.json"
    spec.write_text(json.dumps({"checks": ["formal-identity", "stochasticity"]}))
    code = main(["verify", str(spec), "--out", str(tmp_path / "v")])
    assert code == 0
    captured = capsys.readouterr()
    assert "PASS formal-identity" in captured.out
    assert (tmp_path / "v" / "summary.csv").exists()
