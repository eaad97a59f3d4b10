import csv
import json
import os

import numpy as np
import pytest

from heispde import cli
from heispde.cli import FIXTURES, main, run_fixture


def _load(path):
    with open(path) as fh:
        return json.load(fh)


def test_verify_writes_a_report_and_exits_zero(tmp_path):
    out = tmp_path / "rep.json"
    rc = main([
        "verify", "--field", "log_rho", "--d", "2",
        "--rho-min", "0.5", "--rho-max", "4", "--n-samples", "256",
        "--char-eps", "0.05", "--seed", "7", "--out", str(out),
    ])
    assert rc == 0
    rep = _load(out)
    assert rep["schema"] == "heispde-report-v1"
    assert rep["command"] == "verify"
    assert rep["verdict"] == "pass"
    assert rep["n_evaluated"] + rep["n_excluded"] == rep["n_samples"] == 256
    assert rep["config"]["operator"]["second_order"] == "pucci_min"
    assert not list(tmp_path.glob("*.tmp*"))


def test_failing_inequality_exits_one(tmp_path):
    out = tmp_path / "rep.json"
    rc = main([
        "verify", "--field", "log_rho", "--d", "2", "--sense", "supersolution",
        "--n-samples", "128", "--char-eps", "0.05", "--out", str(out),
    ])
    assert rc == 1
    assert _load(out)["verdict"] == "fail"


def test_vacuous_region_exits_three(tmp_path):
    out = tmp_path / "rep.json"
    rc = main([
        "verify", "--field", "u4", "--Lam", "1.5",
        "--rho-min", "0.9999995", "--rho-max", "1.0000005",
        "--n-samples", "32", "--out", str(out),
    ])
    assert rc == 3
    assert _load(out)["verdict"] == "vacuous"


def test_usage_errors_exit_two(tmp_path, capsys):
    assert main(["verify"]) == 2  # --field is required
    assert main(["verify", "--field", "power", "--d", "1"]) == 2  # kappa missing
    assert main(["verify", "--field", "u3", "--d", "3"]) == 2  # degenerate exponent
    assert main(["op-eval", "--op", "pucci_max", "--matrix", "[[1,0],[0,1"]) == 2
    assert main(["op-eval", "--op", "pucci_max", "--matrix", "[[1,0,0],[0,1,0]]"]) == 2
    assert main(["convergence", "--field", "folland", "--levels", "1"]) == 2
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"field": "log_rho", "no_such_key": 5}))
    assert main(["verify", "--config", str(cfg)]) == 2
    assert main(["verify", "--config", str(tmp_path / "missing.json")]) == 2
    capsys.readouterr()


def test_unknown_flag_exits_two(capsys):
    assert main(["verify", "--field", "log_rho", "--wat"]) == 2
    capsys.readouterr()


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "field": "log_rho", "d": 2, "n_samples": 64, "char_eps": 0.05, "seed": 3,
    }))
    out = tmp_path / "rep.json"
    rc = main(["verify", "--config", str(cfg), "--n-samples", "32", "--out", str(out)])
    assert rc == 0
    rep = _load(out)
    assert rep["n_samples"] == 32
    assert rep["config"]["region"]["char_eps"] == 0.05


def test_reports_are_deterministic(tmp_path):
    argv = [
        "verify", "--field", "u_tilde", "--d", "2", "--op", "neg_trace",
        "--rho-min", "0.25", "--rho-max", "4", "--n-samples", "128",
        "--char-eps", "0.05", "--seed", "5",
    ]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    da, db = _load(a), _load(b)
    da.pop("wall_time"), db.pop("wall_time")
    assert da == db


def test_compare_formula_flag(tmp_path):
    out = tmp_path / "rep.json"
    rc = main([
        "verify", "--field", "log_rho", "--d", "2", "--compare-formula",
        "--n-samples", "128", "--char-eps", "0.05", "--out", str(out),
    ])
    assert rc == 0
    rep = _load(out)
    assert rep["formula_comparison"]["pass"] is True
    assert rep["formula_comparison"]["max_rel_deviation"] <= 1e-12


def test_field_table_csv(tmp_path):
    out = tmp_path / "rep.json"
    table = tmp_path / "table.csv"
    rc = main([
        "verify", "--field", "log_rho", "--d", "1", "--n-samples", "64",
        "--char-eps", "0.05", "--out", str(out), "--field-table", str(table),
    ])
    assert rc == 0
    rep = _load(out)
    with open(table, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    assert header[:2] == ["space", "x1"]
    assert "radius" in header and "total" in header and "alive" in header
    assert len(body) == rep["n_evaluated"]
    # values round-trip as floats
    ri = header.index("radius")
    assert all(0.5 <= float(r[ri]) <= 4.0 for r in body)
    assert not list(tmp_path.glob("*.tmp*"))


def test_lyapunov_command(tmp_path):
    out = tmp_path / "rep.json"
    rc = main([
        "lyapunov", "--fixture", "zero-coeffs", "--d", "1",
        "--rho-min", "1", "--rho-max", "8", "--n-samples", "128",
        "--seed", "11", "--out", str(out),
    ])
    assert rc == 1
    rep = _load(out)
    assert rep["kind"] == "lyapunov"
    assert rep["verdict"] == "fail"
    assert np.isclose(rep["worst_violation"], 5.0)
    assert main(["lyapunov", "--d", "1"]) == 2  # fixture required


def test_op_eval_prints_values(tmp_path, capsys):
    rc = main(["op-eval", "--op", "pucci_max", "--matrix", "[[1,0],[0,-1]]"])
    assert rc == 0
    assert float(capsys.readouterr().out.strip()) == 1.0

    rc = main([
        "op-eval", "--op", "pnorm", "--p", "4",
        "--matrix", "[[2,0],[0,1]]", "--q", "[1,0]",
    ])
    assert rc == 0
    # -(tr + (p-2) q.Mq/|q|^2) = -(3 + 2*2) = -7
    assert float(capsys.readouterr().out.strip()) == -7.0

    out = tmp_path / "ops.json"
    rc = main(["op-eval", "--op", "neg_trace", "--matrix", "[[1,0],[0,2]]",
               "--out", str(out)])
    assert rc == 0
    assert _load(out)["values"] == [-3.0]


def test_convergence_command(tmp_path):
    out = tmp_path / "rep.json"
    rc = main([
        "convergence", "--field", "folland", "--d", "1",
        "--rho-min", "0.8", "--rho-max", "2", "--n-samples", "64", "--seed", "2",
        "--h0", "0.01", "--levels", "3", "--n-points", "6",
        "--min-order", "1.8", "--out", str(out),
    ])
    assert rc == 0
    rep = _load(out)
    assert rep["kind"] == "convergence"
    assert rep["median_order"] >= 1.8
    assert len(rep["rows"]) == 3
    hs = [row["h"] for row in rep["rows"]]
    assert hs == sorted(hs, reverse=True)


def test_gallery_command(tmp_path, capsys):
    assert main(["gallery", "list", "--d", "1"]) == 0
    text = capsys.readouterr().out
    assert "u_tilde" in text and "log_rho" in text

    out = tmp_path / "gal.json"
    assert main(["gallery", "list", "--d", "1", "--lam", "1", "--Lam", "2",
                 "--json", "--out", str(out)]) == 0
    rep = _load(out)
    assert rep["kind"] == "gallery"
    names = {row["name"] for row in rep["rows"]}
    assert {"u2", "u3", "u_tilde", "u4", "u5", "folland"} <= names
    u2 = next(r for r in rep["rows"] if r["name"] == "u2")
    assert u2["valid"] is False  # bump exponent degenerates in one dimension


def test_fixture_registry_runs_with_expected_exits(tmp_path):
    for name in ("verify-log-rho", "lyapunov-zero-coeffs", "op-eval-pucci"):
        out = tmp_path / f"{name}.json"
        rc = run_fixture(name, out=str(out))
        assert rc == FIXTURES[name]["expected_exit"]
        if name != "op-eval-pucci":
            assert _load(out)["schema"] == "heispde-report-v1"
    with pytest.raises(KeyError):
        run_fixture("no-such-fixture")


def test_float_formatting_rejects_non_finite():
    with pytest.raises(ValueError):
        cli._format_float(float("nan"))
    with pytest.raises(ValueError):
        cli._format_float(float("inf"))
    # 17 significant digits round-trip every double exactly
    assert float(cli._format_float(0.1)) == 0.1
    assert json.loads(cli._json_str({"x": np.float64(1.0) / 3.0}))["x"] == 1.0 / 3.0
