import json

import numpy as np
import pytest

from omp_rip.cli import main
from omp_rip.harness import make_rng
from omp_rip.linalg import read_csv, write_csv
from omp_rip.rsc import rho_exact


def _certify(tmp_path, A, *extra):
    write_csv(tmp_path / "A.csv", A)
    out = tmp_path / "cert.json"
    code = main(["certify", "--matrix-path", str(tmp_path / "A.csv"), "--output", str(out), *extra])
    return code, (json.loads(out.read_text()) if code == 0 else None)


def test_certify_identity_small(tmp_path):
    code, rep = _certify(tmp_path, np.eye(8), "--s-max", "4")
    assert code == 0
    assert all(lv["rho_minus"] == lv["rho_plus"] == 1.0 and lv["delta"] == 0.0 for lv in rep["levels"])
    assert rep["corollary1"] == []


def test_certify_identity_32(tmp_path):
    code, rep = _certify(tmp_path, np.eye(32), "--s-max", "32")
    assert code == 0
    v = rep["corollary1"][0]
    assert v["kbar"] == 1 and v["holds"] and v["k0"] == 30 and v["s"] == 31


def test_certify_matches_rho_exact(tmp_path):
    A = make_rng(21).standard_normal((8, 10))
    code, rep = _certify(tmp_path, A, "--s-max", "2")
    assert code == 0
    for lv in rep["levels"]:
        assert (lv["rho_minus"], lv["rho_plus"]) == rho_exact(A, lv["s"])


def test_certify_csv_and_sampled(tmp_path):
    A = make_rng(1).standard_normal((6, 9))
    write_csv(tmp_path / "A.csv", A)
    out = tmp_path / "c.csv"
    assert main(["certify", "--matrix-path", str(tmp_path / "A.csv"), "--s-max", "3", "--mode", "sampled",
                 "--trials", "50", "--seed", "2", "--format", "csv", "--output", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "s,rho_minus,rho_plus,delta,mode,sample_count" and len(lines) == 4
    assert main(["certify", "--matrix-path", str(tmp_path / "A.csv"), "--s-max", "3", "--mode", "sampled"]) == 2


def test_certify_budget_exit(tmp_path, monkeypatch):
    monkeypatch.setenv("OMP_RIP_BUDGET", "5")
    code, _ = _certify(tmp_path, make_rng(0).standard_normal((5, 8)), "--s-max", "2")
    assert code == 3


def test_missing_file_exit(tmp_path):
    assert main(["certify", "--matrix-path", str(tmp_path / "nope.csv"), "--s-max", "1"]) == 2


def _problem(tmp_path, A, y, kind="quadratic"):
    write_csv(tmp_path / "A.csv", A)
    write_csv(tmp_path / "y.csv", y)
    (tmp_path / "p.json").write_text(json.dumps({"kind": kind, "matrix_csv": "A.csv", "observation_csv": "y.csv"}))
    return str(tmp_path / "p.json")


def test_recover_identity(tmp_path):
    y = np.array([0.0, 3.0, 0.0, -1.0])
    prob = _problem(tmp_path, np.eye(4), y)
    trace, out = tmp_path / "trace.json", tmp_path / "x.csv"
    assert main(["recover", "--problem-path", prob, "--k0", "2", "--trace-path", str(trace), "--output", str(out)]) == 0
    recs = json.loads(trace.read_text())
    assert recs[-1]["objective"] == 0.0
    assert [r["selected_j"] for r in recs] == [None, 1, 3]
    assert np.array_equal(read_csv(out).ravel(), y)


def test_recover_bad_f0(tmp_path):
    prob = _problem(tmp_path, np.eye(3), np.ones(3))
    assert main(["recover", "--problem-path", prob, "--k0", "1", "--f0-indices", "7",
                 "--trace-path", str(tmp_path / "t.json")]) == 2


def test_recover_solver_failure(tmp_path, monkeypatch):
    from omp_rip.objective import LogisticObjective

    monkeypatch.setattr(LogisticObjective, "max_newton", 1)
    X = make_rng(0).standard_normal((20, 3))
    labels = np.where(X[:, 0] > 0, 1.0, -1.0)
    prob = _problem(tmp_path, X, labels, kind="logistic")
    assert main(["recover", "--problem-path", prob, "--k0", "1", "--trace-path", str(tmp_path / "t.json"),
                 "--output", str(tmp_path / "x.csv")]) == 4


def test_verify_all_smoke(tmp_path, capsys):
    out = tmp_path / "v.json"
    assert main(["verify", "all", "--instances", "1", "--seed", "5", "--output", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert set(rep["suites"]) == {"lemmas", "theorem1", "corollaries"}
    assert rep["aggregate"]["failures"] == 0
    assert "lemmas: instances=1" in capsys.readouterr().err


def test_verify_theorem1_slacks(tmp_path):
    out = tmp_path / "v.json"
    assert main(["verify", "theorem1", "--instances", "4", "--seed", "0", "--output", str(out)]) == 0
    for inst in json.loads(out.read_text())["suites"]["theorem1"]["instances"]:
        if inst["family"] == "identity31":
            assert min(inst["report"]["slacks"].values()) >= -1e-9


def test_verify_requires_seed():
    with pytest.raises(SystemExit):
        main(["verify", "lemmas"])


def test_sweep_identity_cell(tmp_path):
    out, summ = tmp_path / "s.csv", tmp_path / "s.json"
    assert main(["sweep", "--d", "10", "--kbars", "2", "--n-grid", "10", "--trials-per-cell", "3",
                 "--k0-rule", "exact_k", "--sensing", "identity", "--seed", "1",
                 "--output", str(out), "--summary-path", str(summ)]) == 0
    row = out.read_text().splitlines()[1].split(",")
    assert row[:5] == ["2", "10", "3", "3", "1.0"]
    assert json.loads(summ.read_text())["n50"] == {"2": 10}


def test_sweep_bad_grid():
    assert main(["sweep", "--d", "10", "--kbars", "2", "--n-grid", "x", "--seed", "1"]) == 2
    assert main(["sweep", "--d", "10", "--kbars", "20", "--n-grid", "5", "--seed", "1"]) == 2
