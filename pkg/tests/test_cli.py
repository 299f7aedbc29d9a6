from __future__ import annotations

import csv
import json
import subprocess
import sys

import jsonschema
import pytest

from switchstab.cli import main
from switchstab.config import REPORT_SCHEMA


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


CASE1 = {"scenario": "nl_stable", "model": {"builtin": "sec5"}, "gains": [6, 6], "sigma": 2.0,
         "tau": 1e-4, "tau0": 1.7e-4}


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_design_case1(tmp_path, capsys):
    code, out, _ = run(["design", "--config", write(tmp_path, "c.json", CASE1)], capsys)
    assert code == 0
    rep = json.loads(out)
    jsonschema.validate(rep, REPORT_SCHEMA)
    assert rep["verdict"] == "ok"
    assert rep["tau_sampling_max"] == pytest.approx(9.607e-3, rel=1e-3)
    assert rep["zeta"] == pytest.approx(5.8345, rel=1e-4)
    assert rep["intermediate"]["vartheta"] == pytest.approx(1009.0)


def test_design_quasilinear_config(tmp_path, capsys):
    cfg = {"scenario": "ql_stable", "generator": [[-2, 2], [1, -1]], "gains": [4, 3], "sigma": 0.5,
           "bounds": {"type": "quasilinear", "k_bar": 2, "D": [1, 0.5]}}
    code, out, _ = run(["design", "--config", write(tmp_path, "c.json", cfg), "--variant", "formula_a"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["variant"] == "formula_a" and rep["exponents"]["ms"] < 0


def test_design_hypothesis_failure_exit_2(tmp_path, capsys):
    cfg = dict(CASE1, gains=[1, 1], sigma=0.5)
    code, out, _ = run(["design", "--config", write(tmp_path, "c.json", cfg)], capsys)
    assert code == 2
    rep = json.loads(out)
    jsonschema.validate(rep, REPORT_SCHEMA)
    assert rep["verdict"] == "hypothesis pi.alpha > pi.A failed"
    assert rep["hypotheses"] == {"pi.alpha > pi.A": False}


@pytest.mark.parametrize(
    "cfg, key",
    [
        (dict(CASE1, sigmaa=1.0), "sigmaa"),
        (dict(CASE1, sim={"dt": 1e-3, "horizon": 1, "strid": 2}), "strid"),
        (dict(CASE1, bounds={"type": "nonlinear", "k": 1}), "bounds"),
        (dict(CASE1, tau="fast"), "tau"),
    ],
)
def test_schema_errors_name_the_key(tmp_path, capsys, cfg, key):
    code, _, err = run(["design", "--config", write(tmp_path, "c.json", cfg)], capsys)
    assert code == 1 and key in err


def test_unparseable_json_exit_1(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("{ not json")
    code, _, err = run(["design", "--config", str(p)], capsys)
    assert code == 1 and "invalid JSON" in err


SIM = {"model": {"builtin": "sec5"},
       "sim": {"dt": 1e-4, "horizon": 10, "x0": 1, "i0": 2, "seed": 0, "record_stride": 100, "n_paths": 5}}


def test_simulate_writes_one_csv_per_path(tmp_path, capsys):
    out = tmp_path / "run"
    code, _, _ = run(["simulate", "--config", write(tmp_path, "s.json", SIM), "--out", str(out)], capsys)
    assert code == 0
    files = sorted(p.name for p in out.glob("path_*.csv"))
    assert len(files) == 5
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 0 and not manifest["controlled"] and len(manifest["paths"]) == 5
    rows = list(csv.reader(open(out / files[0])))
    assert rows[0] == ["t", "mode", "x1", "u1"] and len(rows) == 1002


def test_zero_gain_law_gives_identical_bytes(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    sim = dict(SIM, sim=dict(SIM["sim"], n_paths=2, horizon=1))
    lawcfg = dict(sim, gains=[0, 0], tau=1e-4, tau0=3e-4)
    assert run(["simulate", "--config", write(tmp_path, "a.json", sim), "--out", str(a)], capsys)[0] == 0
    assert run(["simulate", "--config", write(tmp_path, "b.json", lawcfg), "--out", str(b)], capsys)[0] == 0
    for name in ("path_0000.csv", "path_0001.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_off_grid_lag_exit_3_unless_snapped(tmp_path, capsys):
    cfg = dict(SIM, gains=[6, 6], tau=1e-4, tau0=1.75e-4,
               sim=dict(SIM["sim"], dt=1e-5, horizon=0.01, n_paths=1))
    path = write(tmp_path, "g.json", cfg)
    code, _, err = run(["simulate", "--config", path, "--out", str(tmp_path / "o")], capsys)
    assert code == 3 and "tau0" in err
    code, _, err = run(["simulate", "--config", path, "--out", str(tmp_path / "o"), "--snap-to-grid"], capsys)
    assert code == 0 and "snapped" in err
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert manifest["tau0_snapped"] == pytest.approx(1.7e-4)


def test_seed_flag_overrides_config(tmp_path, capsys):
    sim = dict(SIM, sim=dict(SIM["sim"], n_paths=1, horizon=0.1, record_stride=1))
    path = write(tmp_path, "s.json", sim)
    run(["simulate", "--config", path, "--out", str(tmp_path / "x"), "--seed", "5"], capsys)
    run(["simulate", "--config", path, "--out", str(tmp_path / "y")], capsys)
    assert json.loads((tmp_path / "x" / "manifest.json").read_text())["seed"] == 5
    assert (tmp_path / "x" / "path_0000.csv").read_bytes() != (tmp_path / "y" / "path_0000.csv").read_bytes()


def test_estimate_flat_curves(tmp_path, capsys):
    cfg = {"generator": [[-1, 1], [1, -1]],
           "model": {"polynomial": {"drift": [[], []], "diffusion": [[], []]}},
           "sim": {"dt": 0.01, "horizon": 1, "x0": 2, "n_paths": 1, "q_list": [2, 4]}}
    out = tmp_path / "e"
    code, stdout, _ = run(["estimate", "--config", write(tmp_path, "e.json", cfg), "--out", str(out)], capsys)
    assert code == 0
    rows = list(csv.reader(open(out / "moments.csv")))
    assert rows[0] == ["t", "q=2", "q=4"]
    assert {float(r[1]) for r in rows[1:]} == {4.0} and {float(r[2]) for r in rows[1:]} == {16.0}
    exp = json.loads((out / "exponent.json").read_text())
    assert set(exp) == {"q", "slope", "stderr", "window", "n_paths", "n_blowups"}
    assert abs(exp["slope"]) < 1e-12


def test_estimate_all_blowups_exit_4(tmp_path, capsys):
    cfg = {"generator": [[-1, 1], [1, -1]],
           "model": {"polynomial": {"drift": [[{"coef": 1, "power": 3}], [{"coef": 1, "power": 3}]],
                                    "diffusion": [[], []]}},
           "sim": {"dt": 0.01, "horizon": 5, "x0": 2, "n_paths": 3}}
    code, _, _ = run(["estimate", "--config", write(tmp_path, "e.json", cfg), "--out", str(tmp_path / "e")], capsys)
    assert code == 4


def test_estimate_unstable_dichotomy(tmp_path, capsys):
    cfg = {"generator": [[-3, 3], [2, -2]],
           "model": {"polynomial": {"drift": [[{"coef": 2, "power": 1}], [{"coef": 2, "power": 1}]],
                                    "diffusion": [[{"coef": 0.1, "power": 1}], [{"coef": 0.1, "power": 1}]]}},
           "gains": [0.5, 0.5], "tau": 1e-3, "tau0": 1e-3,
           "sim": {"dt": 1e-3, "horizon": 5, "x0": 1, "n_paths": 10, "record_stride": 10}}
    code, stdout, _ = run(["estimate", "--config", write(tmp_path, "e.json", cfg), "--out", str(tmp_path / "e")],
                          capsys)
    assert code == 4 or json.loads(stdout)["ms"]["slope"] > 0


def test_reproduce_example(tmp_path, capsys):
    code, out, _ = run(["reproduce-example", "--out", str(tmp_path)], capsys)
    assert code == 0
    rows = json.loads((tmp_path / "reproduce.json").read_text())["rows"]
    checked = [r for r in rows if r["passed"] is not None]
    assert checked and all(r["passed"] for r in checked), [r for r in checked if not r["passed"]]
    assert "kappa(6.5, -4)" in out and "pass" in out


def test_reproduce_variant_a_prints_deviation(capsys, monkeypatch):
    from switchstab import example
    monkeypatch.setattr(example, "monte_carlo_rows", lambda *a, **k: [])
    code, out, _ = run(["reproduce-example", "--variant", "formula_a"], capsys)
    assert code == 0
    assert "deviation from formula_b" in out and "case2 tau_prime" in out
    assert "FAIL" in out


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "switchstab", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "reproduce-example" in res.stdout
