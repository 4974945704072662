from __future__ import annotations

import json

import numpy as np
import pytest

from sketchf.cli import build_problem, main

PROBLEM = {
    "spectrum": {"kind": "polynomial", "p": 200, "alpha": 2.0},
    "coefficients": {"dist": "binom_mix"},
    "signal": 0.5,
    "n": 120,
    "seed": 3,
}


def _run(argv, capsys):
    code = main(argv)
    return code, capsys.readouterr()


def test_build_problem_signal():
    beta, cov, seed = build_problem(PROBLEM)
    assert seed == 3 and cov.p == 200
    assert cov.signal(beta) == pytest.approx(0.5)
    beta2, cov2, _ = build_problem({**PROBLEM, "basis": "haar"})
    assert not np.allclose(cov2.basis, np.eye(200))


def test_cli_test_command(tmp_path, capsys):
    rng = np.random.default_rng(0)
    X = rng.standard_normal((60, 100))
    y = X[:, 0] * 3 + rng.standard_normal(60)
    np.savetxt(tmp_path / "X.csv", X, delimiter=",")
    np.savetxt(tmp_path / "y.csv", y, delimiter=",")
    code, out = _run(["test", str(tmp_path / "X.csv"), str(tmp_path / "y.csv"), "--k", "20"], capsys)
    assert code == 0
    report = json.loads(out.out)
    assert report["d1"] == 20 and report["d2"] == 40
    assert 0.0 <= report["p_value"] <= 1.0


def test_cli_classical(tmp_path, capsys):
    rng = np.random.default_rng(1)
    X = rng.standard_normal((40, 5))
    np.savetxt(tmp_path / "X.csv", X, delimiter=",")
    np.savetxt(tmp_path / "y.csv", rng.standard_normal(40), delimiter=",")
    code, out = _run(["test", str(tmp_path / "X.csv"), str(tmp_path / "y.csv"), "--classical"], capsys)
    assert code == 0 and json.loads(out.out)["d1"] == 5


def test_cli_power_and_dim(capsys):
    code, out = _run(["power", json.dumps(PROBLEM)], capsys)
    assert code == 0
    prof = json.loads(out.out)
    assert 0.0 <= prof["power_sketched"] <= 1.0
    code, out = _run(["dim", json.dumps({**PROBLEM, "r": 5})], capsys)
    assert code == 0
    doc = json.loads(out.out)
    assert doc["min_r"] == 5 and "report" in doc and doc["recommended_k"] >= 5


def test_cli_oracles(capsys):
    spec = json.dumps({"kind": "polynomial", "p": 30, "alpha": 2.0})
    assert _run(["oracle", "quadratic-tail", "--spectrum", spec, "--t", "1", "--reps", "2000"], capsys)[0] == 0
    assert _run(["oracle", "norm-ineq", "--spectrum", spec], capsys)[0] == 0
    assert _run(["oracle", "lambda-sketch", "--spectrum", spec, "--t", "0.5", "--reps", "1000"], capsys)[0] == 0
    assert _run(["oracle", "wishart", "--k", "5", "--p", "50", "--t", "0.3", "--reps", "1000"], capsys)[0] == 0
    prob = json.dumps({**PROBLEM, "r": 3})
    code, out = _run(["oracle", "xi-star", prob], capsys)
    assert code == 0 and json.loads(out.out)["constraint_error"] < 1e-8
    code, out = _run(["oracle", "l1-l2", prob], capsys)
    assert code == 0 and json.loads(out.out)["holds"]


def test_cli_errors(capsys):
    code, out = _run(["power", "/nonexistent.json"], capsys)
    assert code == 2 and "error" in out.err
    code, out = _run(["power", json.dumps({"n": 10})], capsys)
    assert code == 2


def test_cli_simlab_preset(capsys):
    code, out = _run(["simlab", "preset", "table1"], capsys)
    assert code == 0 and json.loads(out.out)["experiment"] == "table1"
