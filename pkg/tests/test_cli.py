import json
import re
from pathlib import Path

import pytest

from bandctl.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def strip_timing(text: str) -> str:
    return re.sub(r'"timing_seconds": [0-9eE\.\+\-]+', '"timing_seconds": 0', text)


def test_load_and_echo_roundtrip(tmp_path):
    out = tmp_path / "r.json"
    rc = main(["evaluate", str(CONFIGS / "ex1.json"), "--y2", "1.526", "--y3", "1.526",
               "--y1", "5.077", "--grid", "12", "--output", str(out)])
    assert rc == 0
    rep = json.loads(out.read_text())
    assert rep["model"]["sigma1"] == 3.0
    assert rep["model"]["switching"][0][1] == 4.0
    assert len(rep["grid"]) == 12
    assert rep["objective"] == rep["level_b"]["V0"]


def test_evaluate_byte_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["evaluate", str(CONFIGS / "ex3.json"), "--y2", "2.468", "--y3", "3.114",
            "--y1", "4.610", "--y4", "7.660", "--grid", "40"]
    assert main(args + ["--output", str(a)]) == 0
    assert main(args + ["--output", str(b)]) == 0
    assert strip_timing(a.read_text()) == strip_timing(b.read_text())


def test_simulate_jobs_invariant_bytes(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    base = ["simulate", str(CONFIGS / "ex1.json"), "--y2", "1.526", "--y1", "5.077",
            "--x0", "3.0", "--phase", "2", "--paths", "4000", "--seed", "7"]
    assert main(base + ["--jobs", "1", "--output", str(a)]) == 0
    assert main(base + ["--jobs", "3", "--output", str(b)]) == 0
    assert strip_timing(a.read_text()) == strip_timing(b.read_text())


def test_verify_subcommand(tmp_path):
    out = tmp_path / "v.json"
    rc = main(["verify", str(CONFIGS / "ex3.json"), "--y2", "2.468", "--y3", "3.114",
               "--y1", "4.610", "--y4", "7.660", "--output", str(out)])
    assert rc == 0
    rep = json.loads(out.read_text())
    assert rep["verified"] is True
    assert rep["failures"] == []


def test_plot_data_threshold_doubling(tmp_path):
    out = tmp_path / "p.csv"
    rc = main(["plot-data", str(CONFIGS / "ex1.json"), "--y2", "1.526", "--y3", "1.526",
               "--y1", "5.077", "--grid", "25", "--output", str(out)])
    assert rc == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "x,V1,H1,S1,K1,V2,H2,S2,K2,V0,H0,S0,K0"
    xs = [float(line.split(",")[0]) for line in lines[1:]]
    assert xs.count(1.526) == 2 and xs.count(5.077) == 2
    # the two rows at a threshold expose the jump in V2
    rows = [line.split(",") for line in lines[1:]]
    at = [r for r in rows if float(r[0]) == 1.526]
    assert float(at[0][5]) != float(at[1][5])


def test_invalid_config_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    cfg = json.loads((CONFIGS / "ex1.json").read_text())
    cfg["sigma2"] = 9.0
    bad.write_text(json.dumps(cfg))
    assert main(["evaluate", str(bad), "--y2", "1.0", "--y1", "5.0"]) == 2
    assert main(["evaluate", str(tmp_path / "missing.json"), "--y2", "1.0",
                 "--y1", "5.0"]) == 2


def test_solve_require_verified_exit_three(tmp_path):
    # the best two-threshold policy for the second example is unverifiable
    out = tmp_path / "s.json"
    rc = main(["solve", str(CONFIGS / "ex2.json"), "--strategy", "doshi",
               "--require-verified", "--output", str(out)])
    assert rc == 3
    rep = json.loads(out.read_text())
    assert rep["verified"] is False
    assert rep["verification_failures"]


def test_solve_fixed_strategy_report(tmp_path):
    out = tmp_path / "s.json"
    rc = main(["solve", str(CONFIGS / "ex1.json"), "--strategy", "doshi",
               "--output", str(out)])
    assert rc == 0
    rep = json.loads(out.read_text())
    assert rep["strategy_kind"] == "doshi"
    assert rep["verified"] is True
    assert rep["thresholds"]["y2"] == pytest.approx(0.0, abs=1e-3)
    assert rep["thresholds"]["y1"] == pytest.approx(3.374, abs=5e-3)
