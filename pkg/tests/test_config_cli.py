import json
import subprocess
import sys

import pytest

from prestrain.cli import main
from prestrain.config import ExperimentConfig
from prestrain.geometry import Regime


def test_config_round_trip(tmp_path):
    cfg = ExperimentConfig(metric="diag_lambda", lambda_poly="1,0,0,1,0,0", grid=17, h_list=[0.1, 0.05])
    again = ExperimentConfig.from_json(cfg.to_json())
    assert again == cfg
    path = tmp_path / "c.json"
    cfg.save(path)
    assert ExperimentConfig.load(path) == cfg


def test_config_rejects_bad_input():
    with pytest.raises(ValueError, match="unknown config keys"):
        ExperimentConfig.from_json('{"metrc": "identity"}')
    with pytest.raises(ValueError, match="unknown metric kind"):
        ExperimentConfig(metric="torus")
    with pytest.raises(ValueError, match="degree"):
        ExperimentConfig(metric="diag_lambda", lambda_poly=[1.0] * 21).build_metric()


@pytest.mark.parametrize(
    "args, code",
    [
        (["--metric", "identity"], Regime.Flat.exit_code),
        (["--metric", "diag_lambda", "--lambda-poly", "1,0.6,0,0.09,0,0"], Regime.Flat.exit_code),
        (["--metric", "diag_lambda", "--lambda-poly", "1,0,0,1,0,0"], Regime.OrderH4.exit_code),
        (["--metric", "polynomial", "--entries", "1;0;0;1,0,0,1,0,0;0;1"], Regime.OrderH2.exit_code),
        (["--metric", "diag_lambda", "--lambda-poly", "-1"], 1),
        (["--metric", "diag_lambda"], 1),
    ],
)
def test_classify_exit_codes(args, code, capsys):
    assert main(["classify", "--grid", "9", *args]) == code


def test_unknown_command_exits_with_one():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1


def test_export_then_classify_sampled(tmp_path, capsys):
    table = tmp_path / "g.csv"
    assert main(["export-metric", "--metric", "diag_lambda", "--lambda-poly", "1,0,0,1,0,0",
                 "--grid", "33", "--out", str(table)]) == 0
    assert main(["classify", "--metric", "sampled", "--file", str(table)]) == Regime.OrderH4.exit_code


def test_subcommands_write_json(tmp_path, capsys):
    out = tmp_path / "o.json"
    assert main(["q2a", "--out", str(out)]) == 0
    rec = json.loads(out.read_text())
    assert rec["value"] == pytest.approx(20 / 3)
    assert main(["i4-eval", "--metric", "conformal_lambda", "--f-poly", "0,1,0", "--grid", "9",
                 "--out", str(out)]) == 0
    rec = json.loads(out.read_text())
    assert rec["general"]["curvature_term"] == pytest.approx(rec["reduced"]["curvature_term"], rel=1e-10)
    assert main(["identity-check", "--metric", "conformal_lambda", "--f-poly", "0,1,0", "--grid", "17",
                 "--out", str(out)]) == 0
    assert json.loads(out.read_text())["sup"] <= 1e-8
    assert main(["energy3d", "--metric", "diag_lambda", "--lambda-poly", "1,2,0,1,0,0",
                 "--family", "exact_flat", "--grid", "9", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["Eh"] <= 1e-18


def test_minimize_rejects_conformal(capsys):
    assert main(["minimize", "--metric", "conformal_lambda", "--f-poly", "0,1,0", "--grid", "9"]) == 1
    assert "diag" in capsys.readouterr().err


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    ExperimentConfig(metric="diag_lambda", lambda_poly=[1, 0, 0, 1, 0, 0], grid=9).save(cfg)
    assert main(["classify", "--config", str(cfg)]) == Regime.OrderH4.exit_code
    assert main(["classify", "--config", str(cfg), "--lambda-poly", "1"]) == Regime.Flat.exit_code
    saved = tmp_path / "eff.json"
    main(["classify", "--config", str(cfg), "--grid", "11", "--save-config", str(saved)])
    assert ExperimentConfig.load(saved).grid == 11


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "prestrain", "classify", "--metric", "identity", "--grid", "9"],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert "Flat" in r.stdout


def test_identity_check_on_flat_metric(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["identity-check", "--metric", "identity", "--grid", "17", "--out", str(out)]) == 0
    rec = json.loads(out.read_text())
    assert rec["sup"] == 0.0 and rec["sampled"]["ratio"] is None


@pytest.mark.parametrize(
    "args",
    [
        ["--metric", "identity"],
        ["--metric", "diag_lambda", "--lambda-poly", "1,0.6,0,0.09,0,0", "--family", "exact_flat"],
    ],
)
def test_scaling_of_flat_metrics_is_zero(args, tmp_path, capsys):
    out = tmp_path / "s.csv"
    assert main(["scaling", "--grid", "17", "--out", str(out), *args]) == 0
    lines = out.read_text().splitlines()
    assert all(float(r.split(",")[1]) <= 1e-18 for r in lines[1:-1])
    meta = json.loads(lines[-1])
    assert meta["regime"] == "Flat" and meta["fitted_slope"] is None


def test_minimize_cli_examples(tmp_path, capsys):
    out = tmp_path / "m.csv"
    assert main(["minimize", "--metric", "identity", "--grid", "17", "--out", str(out)]) == 0
    assert json.loads(out.read_text().splitlines()[-1])["total"] <= 1e-10
    assert main(["minimize", "--metric", "diag_lambda", "--lambda-poly", "1,0.6,0,0.09,0,0",
                 "--grid", "17", "--out", str(out)]) == 0
    assert json.loads(out.read_text().splitlines()[-1])["total"] <= 1e-6


def test_identity_check_refinement_ratio(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["identity-check", "--metric", "diag_lambda", "--lambda-poly", "1,0,0,1,0,0",
                 "--grid", "101", "--out", str(out)]) == 0
    rec = json.loads(out.read_text())
    assert rec["sup"] <= 1e-8
    assert rec["sampled"]["ratio"] == pytest.approx(4.0, abs=0.1)
