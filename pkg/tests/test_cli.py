import csv
import json

import pytest

from entropy_execution import checks, cli
from entropy_execution.experiment import STRESS_TABLES, preset

M1_H2_0 = -7.3242019652167816e-06
M1_XT_OVER_X0 = 0.015147789074894381
A1 = -7.868131868131868131868e-06


def _write_config(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def _preset_dict(name, **sim):
    data = preset(name).to_dict()
    data["sim"].update(sim)
    return data


def test_solve_preset(tmp_path):
    out = tmp_path / "solve"
    assert cli.main(["solve", "--preset", "m1-benchmark", "--out", str(out)]) == 0
    coeffs = json.loads((out / "coeffs.json").read_text())
    assert coeffs["provenance"] == "closed-form"
    assert coeffs["H2_0"] == pytest.approx(M1_H2_0, rel=1e-12)
    assert coeffs["x_star_T_over_x0"] == pytest.approx(M1_XT_OVER_X0, rel=1e-10)
    assert coeffs["coefficients_at_t0"]["a1"] == pytest.approx(A1, rel=1e-13)
    with open(out / "curves.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 1001
    assert list(rows[0]) == ["t", "H2", "H1", "H0", "v_star_per_unit_x", "v_star_intercept", "x_star"]
    assert float(rows[-1]["x_star"]) == pytest.approx(M1_XT_OVER_X0 * 1e6, rel=1e-10)


def test_solve_falls_back_to_solver(tmp_path):
    data = _preset_dict("m1-benchmark")
    data["risk"] = {"r_xx": 0.0, "r_xa": -2.5e-6, "r_aa": 9e-7}  # A1 = 0
    out = tmp_path / "solver"
    assert cli.main(["solve", "--config", _write_config(tmp_path, data), "--out", str(out)]) == 0
    coeffs = json.loads((out / "coeffs.json").read_text())
    assert coeffs["provenance"] == "solver"
    assert coeffs["solver_formulation"] in ("value", "reciprocal")


def test_simulate_smoke_and_determinism(tmp_path):
    path = _write_config(tmp_path, _preset_dict("m2-benchmark", n_paths=1, n_steps=2))
    assert cli.main(["simulate", "--config", path, "--out", str(tmp_path / "a")]) == 0
    assert cli.main(["simulate", "--config", path, "--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "summary.json").read_bytes()
    assert a == (tmp_path / "b" / "summary.json").read_bytes()
    summary = json.loads(a)
    assert summary["n_paths"] == 1 and set(summary["strategies"]) == {"optimal", "twap"}
    assert summary["strategies"]["optimal"]["v_total"]["variance"] is None
    for name in ("decomposition_optimal.csv", "decomposition_twap.csv", "histograms.csv", "config.json"):
        assert (tmp_path / "a" / name).exists()


def test_overrides_change_seed(tmp_path):
    args = ["simulate", "--preset", "m1-benchmark", "--paths", "8", "--steps", "20"]
    assert cli.main(args + ["--out", str(tmp_path / "s0")]) == 0
    assert cli.main(args + ["--seed", "1", "--out", str(tmp_path / "s1")]) == 0
    s0 = json.loads((tmp_path / "s0" / "summary.json").read_text())
    s1 = json.loads((tmp_path / "s1" / "summary.json").read_text())
    assert s0["seed"] == 0 and s1["seed"] == 1 and s0["n_paths"] == 8
    assert s0["strategies"]["optimal"]["v_total"]["mean"] != s1["strategies"]["optimal"]["v_total"]["mean"]


def test_stress_table(tmp_path):
    assert cli.main(["stress", "--table", "2", "--paths", "4", "--steps", "10", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "stress_report.json").read_text())
    assert set(report["scenarios"]) == set(STRESS_TABLES[2])
    assert (tmp_path / "m2-large-Rvv" / "summary.json").exists()


@pytest.mark.parametrize("mutate", [
    lambda d: d.pop("params"),
    lambda d: d["params"].update(eta=-1.0),
    lambda d: d["risk"].update(r_vv=1.0),
    lambda d: d.update(model=3),
    lambda d: d["sim"].update(n_paths="many"),
    lambda d: d.update(strategies=["vwap"]),
])
def test_invalid_configs_exit_1(tmp_path, mutate, capsys):
    data = _preset_dict("m2-benchmark")
    mutate(data)
    assert cli.main(["solve", "--config", _write_config(tmp_path, data), "--out", str(tmp_path)]) == 1
    assert "configuration error" in capsys.readouterr().err


def test_unreadable_inputs_exit_1(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["solve", "--config", str(bad)]) == 1
    assert cli.main(["solve", "--config", str(tmp_path / "missing.json")]) == 1
    assert cli.main(["solve"]) == 1
    assert cli.main(["solve", "--preset", "nope"]) == 1
    assert cli.main(["stress", "--out", str(tmp_path)]) == 1


def test_runtime_error_exit_3(tmp_path):
    data = _preset_dict("m1-benchmark")
    data["params"].update(delta=0.0, gamma=1e-2)  # negative terminal penalty blows up
    assert cli.main(["solve", "--config", _write_config(tmp_path, data), "--out", str(tmp_path)]) == 3


def test_check_limits_passes(tmp_path, capsys):
    assert cli.main(["check", "--suite", "limits", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "check_limits.json").read_text())
    assert report["passed"] and len(report["checks"]) == 4
    assert capsys.readouterr().out.count("PASS") == 4


def test_check_failure_exit_2(tmp_path, monkeypatch):
    monkeypatch.setitem(checks.SUITES, "limits", lambda: [checks._record("forced", 1.0, 0.5, False)])
    assert cli.main(["check", "--suite", "limits", "--out", str(tmp_path)]) == 2
