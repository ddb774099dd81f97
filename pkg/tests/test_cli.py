import csv
import json
import subprocess
import sys

import pytest

from polaritonlab.cli import COMMANDS, main
from polaritonlab.configs import PAPER, validate


def run(args, tmp_path, name="out"):
    out = tmp_path / name
    code = main(list(args) + ["--out-dir", str(out)])
    return code, out


def read_csv(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    assert lines[0].startswith("# manifest sha256=")
    return lines[0].split("=", 1)[1], list(csv.DictReader(lines[1:]))


def test_help_lists_every_subcommand():
    res = subprocess.run([sys.executable, "-m", "polaritonlab", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for name in COMMANDS:
        assert name in res.stdout


def test_paper_preset_is_valid():
    for name in COMMANDS:
        if name != "hbt-analyze":  # needs a timetag file
            validate(PAPER, name)


def test_missing_required_key_exit_2(tmp_path, capsys):
    code, _ = run(["g2-sweep", "--set", "blockade.gamma=0.2"], tmp_path)
    assert code == 2
    err = json.loads(capsys.readouterr().err)
    assert err["key"] == "blockade.deltas"


def test_unknown_key_exit_2(tmp_path, capsys):
    code, _ = run(["extract", "--set", "extraction.gama=0.2"], tmp_path)
    assert code == 2
    assert "extraction.gama" in capsys.readouterr().err


def test_bad_device_key_exit_2(tmp_path, capsys):
    code, _ = run(["wg-mode", "--set", "waveguide.strip_widths=[5]", "--set", "device.ito_index=0.5"], tmp_path)
    assert code == 2
    assert json.loads(capsys.readouterr().err)["key"] == "ito_index"


def test_module_error_exit_1(tmp_path, capsys):
    args = ["extract", "--set", "extraction.g2_min=1.02", "--set", "extraction.gamma=0.2",
            "--set", "extraction.w=5", "--set", "extraction.v_g=25"]
    code, out = run(args, tmp_path)
    assert code == 1
    rec = json.loads((out / "error.json").read_text())
    assert rec["error"] == "NoBlockadeSignal"
    assert json.loads(capsys.readouterr().err)["exit_code"] == 1


def test_g2_sweep_without_interaction_is_flat(tmp_path):
    args = ["g2-sweep", "--set", "blockade.gamma=0.22", "--set", "blockade.U_dd=0",
            "--set", 'blockade.deltas={"start": -2, "stop": 2, "num": 3, "unit": "gamma"}']
    code, out = run(args, tmp_path)
    assert code == 0
    digest, rows = read_csv(out / "g2_sweep.csv")
    assert len(rows) == 3
    assert all(abs(float(r["g2_0"]) - 1) < 1e-4 for r in rows)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["input_hash"] == digest
    assert json.loads((out / "g2_sweep.json").read_text())["manifest_sha256"] == digest


def test_outputs_are_byte_identical(tmp_path):
    args = ["hbt-generate", "--set", "hbt.n_pulses=20000", "--set", "hbt.p_click=0.05",
            "--set", "hbt.g2_target=0.9", "--seed", "5"]
    assert run(args, tmp_path, "a")[0] == 0
    assert run(args, tmp_path, "b")[0] == 0
    for name in ("timetags.csv", "timetags.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert not list((tmp_path / "a").glob(".*tmp"))
    other = run(args[:-1] + ["6"], tmp_path, "c")[1]
    assert (other / "timetags.csv").read_bytes() != (tmp_path / "a" / "timetags.csv").read_bytes()


def test_generate_then_analyze(tmp_path):
    gen = ["hbt-generate", "--set", "hbt.n_pulses=500000", "--set", "hbt.p_click=0.05",
           "--set", "hbt.g2_target=0.9", "--seed", "2"]
    code, out = run(gen, tmp_path, "gen")
    assert code == 0
    code, res = run(["hbt-analyze", "--set", f"hbt.timetags={out / 'timetags.csv'}",
                     "--set", "hbt.bootstrap=50"], tmp_path, "ana")
    assert code == 0
    est = json.loads((res / "g2_estimate.json").read_text())
    assert abs(est["g2_0"] - 0.9) < 3 * est["uncertainty"]
    assert {"1", "-1", "9", "-9"} <= set(est["masked_m"])
    assert est["bootstrap_sigma"] > 0
    _, rows = read_csv(res / "histogram.csv")
    assert sum(int(r["counts"]) for r in rows) > 0


def test_config_file_and_override_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"extraction": {"g2_min": 0.5, "gamma": 0.215, "w": 5, "v_g": 25.6}}))
    code, out = run(["extract", "--config", str(cfg), "--set", "extraction.g2_min=0.94"], tmp_path)
    assert code == 0
    rep = json.loads((out / "extraction.json").read_text())
    assert rep["g2_min"] == 0.94
    assert rep["g_dd"] == pytest.approx(4.14, abs=0.01)


def test_reproduce_pipeline_small(tmp_path):
    args = ["reproduce-paper", "--set", "calibration.gammas=[0.22]",
            "--set", "calibration.u_over_gamma=[0.05, 0.1]",
            "--set", 'blockade.deltas={"start": -3, "stop": 3, "num": 3, "unit": "gamma"}',
            "--set", "blockade.find_dip=false", "--set", "stark.fields=[2.358490566]",
            "--set", "hbt.n_pulses=200000", "--set", "hbt.p_click=0.05", "--set", "hbt.targets=[1.0]",
            "--set", "hbt.bootstrap=0"]
    code, out = run(args, tmp_path)
    assert code == 0
    _, rows = read_csv(out / "summary.csv")
    names = {r["quantity"] for r in rows}
    assert {"kappa", "b", "g_dd", "R_b", "dipole length d", "C_ex"} <= names
    for name in ("stark.csv", "wg_mode.csv", "dispersion.csv", "calibration.csv", "g2_sweep.csv",
                 "extraction.json", "hbt_roundtrip.csv", "summary.json", "manifest.json"):
        assert (out / name).exists()
