import json

import numpy as np
import pytest

from neumann_dual import DomainKind, RadialFunction, make_grid, project_zero_average
from neumann_dual.cli import main
from neumann_dual.rearrange import MeasureProfile


def write_profile(path, kind, fn, n=257, zero_mean=False):
    grid = make_grid(kind, n)
    h = RadialFunction.from_callable(grid, fn)
    if zero_mean:
        h = project_zero_average(h)
    h.write_csv(path)
    return grid


def test_solve_writes_reproducible_outputs(tmp_path, capsys):
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["solve", "--domain", "interval", "--p", "0.5", "--q", "0.5", "--nodes", "257"]
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    assert out1.with_suffix(".json").read_bytes() == out2.with_suffix(".json").read_bytes()
    assert "converged" in capsys.readouterr().out
    meta = json.loads(out1.with_suffix(".json").read_text())
    assert meta["run"]["converged"] and meta["exponents"]["regime"] == "sublinear"


def test_solve_json_format(tmp_path):
    out = tmp_path / "s.json"
    assert main(["solve", "--domain", "ball", "--N", "3", "--p", "3", "--q", "3", "--nodes", "129", "--format", "json", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert len(doc["solution"]["f"]) == 128


def test_solve_linear_case_is_invalid(tmp_path, capsys):
    out = tmp_path / "x.csv"
    assert main(["solve", "--p", "1", "--q", "1", "--out", str(out)]) == 2
    assert "pq=1 unsupported" in capsys.readouterr().err
    assert not out.exists() and not out.with_suffix(".json").exists()


def test_solve_bad_domain_and_missing_dir(tmp_path):
    assert main(["solve", "--domain", "annulus", "--N", "2", "--delta", "1.5"]) == 2
    assert main(["solve", "--out", str(tmp_path / "nope" / "x.csv")]) == 2
    assert main(["solve", "--nodes", "4"]) == 2


def test_unconverged_solve_exits_one(tmp_path):
    out = tmp_path / "u.csv"
    code = main(["solve", "--domain", "ball", "--N", "3", "--p", "3", "--q", "3", "--nodes", "129", "--tol", "1e-30", "--out", str(out)])
    assert code == 1
    assert out.exists()


def test_config_file_mirrors_flags(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"domain": "interval", "p": 0.5, "q": 0.5, "nodes": 129}))
    out = tmp_path / "s.csv"
    assert main(["solve", "--config", str(cfg), "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 129
    cfg.write_text(json.dumps({"colour": "red"}))
    assert main(["solve", "--config", str(cfg)]) == 2


def test_transform_star_interval_sine(tmp_path):
    src, dst = tmp_path / "sin.csv", tmp_path / "star.csv"
    write_profile(src, DomainKind.interval(), lambda x: np.sin(np.pi * x), 1025)
    assert main(["transform", "star", str(src), "--domain", "interval", "--out", str(dst)]) == 0
    prof = MeasureProfile.from_csv(dst.read_text())
    s = np.linspace(0.01, 1.99, 50)
    assert np.max(np.abs(prof.evaluate(s) - np.cos(np.pi * s / 2))) <= 1e-2
    rep = json.loads(dst.with_suffix(".json").read_text())
    assert abs(rep["average"]["output"]) <= 1e-12
    for pair in rep["norms"].values():
        assert pair["output"] == pytest.approx(pair["input"], rel=1e-12)


def test_transform_flip_reports_cumulative_identity(tmp_path):
    src, dst = tmp_path / "h.csv", tmp_path / "flip.json"
    write_profile(src, DomainKind.ball(3), lambda r: np.cos(3 * np.pi * r), zero_mean=True)
    code = main(["transform", "flip", str(src), "--domain", "ball", "--N", "3", "--format", "json", "--out", str(dst)])
    assert code == 0
    rep = json.loads(dst.read_text())
    assert rep["cumulative_identity_max"] <= 1e-10
    assert min(rep["cumulative"]["I_flip"]) >= -1e-12


def test_transform_star_nonzero_average_is_invalid(tmp_path):
    src, dst = tmp_path / "one.csv", tmp_path / "o.csv"
    write_profile(src, DomainKind.ball(3), lambda r: 1 + 0 * r)
    assert main(["transform", "star", str(src), "--domain", "ball", "--N", "3", "--out", str(dst)]) == 2
    assert not dst.exists()


def test_transform_schwarz_ball_only(tmp_path, capsys):
    src = tmp_path / "ann.csv"
    write_profile(src, DomainKind.annulus(2, 0.3), lambda r: r)
    assert main(["transform", "schwarz", str(src), "--domain", "annulus", "--N", "2", "--delta", "0.3"]) == 2
    assert "balls only" in capsys.readouterr().err


def test_transform_rearrange_to_stdout(tmp_path, capsys):
    src = tmp_path / "r.csv"
    write_profile(src, DomainKind.ball(2), lambda r: r, 65)
    assert main(["transform", "rearrange", str(src), "--domain", "ball", "--N", "2"]) == 0
    assert capsys.readouterr().out.startswith("s,value")


def test_counterexample_command(capsys, tmp_path):
    out = tmp_path / "ce.json"
    assert main(["counterexample", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "A = 5.2272" in text and "B = 2.2444" in text and "PASS" in text
    assert json.loads(out.read_text())["passed"]
    assert main(["counterexample", "--points", "100"]) == 2


def test_verify_single_suite(tmp_path):
    out = tmp_path / "v.json"
    assert main(["verify", "--suite", "rigidity", "--seed", "42", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert [c["name"] for c in doc["checks"]] == ["rigidity"]


def test_verify_matrix_config_error(tmp_path):
    cfg = tmp_path / "m.json"
    cfg.write_text(json.dumps({"matrix": [{"domain": "ball", "N": 3, "p": 1.0, "q": 1.0, "nodes": 64}]}))
    assert main(["verify", "--suite", "matrix", "--config", str(cfg)]) == 1


def test_symmetry_test_roundtrip(tmp_path, capsys):
    sol = tmp_path / "sol.csv"
    assert main(["solve", "--domain", "ball", "--N", "2", "--p", "3", "--q", "3", "--nodes", "513", "--out", str(sol)]) == 0
    rep = tmp_path / "sym.json"
    assert main(["symmetry-test", str(sol), "--out", str(rep)]) == 0
    doc = json.loads(rep.read_text())
    assert doc["passed"]
    assert all(c["values"]["integral"] < 0 for c in doc["checks"])


def test_symmetry_test_rejects_interval_and_missing(tmp_path):
    sol = tmp_path / "i.csv"
    assert main(["solve", "--domain", "interval", "--p", "0.5", "--q", "0.5", "--nodes", "129", "--out", str(sol)]) == 0
    assert main(["symmetry-test", str(sol)]) == 2
    assert main(["symmetry-test", str(tmp_path / "missing.csv")]) == 2


def test_symmetry_test_rejects_mismatched_grid(tmp_path):
    sol = tmp_path / "sol.csv"
    assert main(["solve", "--domain", "ball", "--N", "2", "--p", "3", "--q", "3", "--nodes", "129", "--out", str(sol)]) == 0
    meta = json.loads(sol.with_suffix(".json").read_text())
    meta["nodes"] = 130
    sol.with_suffix(".json").write_text(json.dumps(meta))
    assert main(["symmetry-test", str(sol)]) == 2
