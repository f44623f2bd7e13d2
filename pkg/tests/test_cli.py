import os

import pytest
from click.testing import CliRunner

from fcsim.cli import main

from helpers import CIRCUITS, fieldspec_text


@pytest.fixture()
def runner():
    return CliRunner()


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_analyze_index1(runner):
    result = runner.invoke(main, ["analyze", os.path.join(CIRCUITS, "rl_series.cir")])
    assert result.exit_code == 0
    assert "differential index: 1" in result.output


def test_analyze_index2_names_witnesses(runner, tmp_path):
    path = _write(tmp_path, "i2.cir", "I1 1 0 DC 1.0\nL1 1 0 1.0\n.ground 0\n")
    result = runner.invoke(main, ["analyze", path])
    assert result.exit_code == 0
    assert "differential index: 2" in result.output
    assert "I1" in result.output and "L1" in result.output


def test_analyze_kv_block(runner, tmp_path):
    path = _write(tmp_path, "i2.cir", "I1 1 0 DC 1.0\nL1 1 0 1.0\n.ground 0\n")
    result = runner.invoke(main, ["analyze", "--kv", path])
    assert result.exit_code == 0
    assert "index = 2" in result.output


def test_analyze_parse_error_exit_1(runner, tmp_path):
    path = _write(tmp_path, "bad.cir", "L1 1 0 -2.0\n.ground 0\n")
    result = runner.invoke(main, ["analyze", path])
    assert result.exit_code == 1


def test_analyze_ill_posed_exit_2(runner, tmp_path):
    path = _write(tmp_path, "ill.cir", "I1 1 0 DC 1.0\n.ground 0\n")
    result = runner.invoke(main, ["analyze", path])
    assert result.exit_code == 2
    assert "well posed: no" in result.output


def test_simulate_writes_deterministic_csv(runner, tmp_path):
    out1 = str(tmp_path / "a.csv")
    out2 = str(tmp_path / "b.csv")
    src = os.path.join(CIRCUITS, "rl_series.cir")
    for out in (out1, out2):
        result = runner.invoke(
            main, ["simulate", src, "--dt", "1e-2", "--t-end", "0.1", "--out", out]
        )
        assert result.exit_code == 0, result.output
    with open(out1, "rb") as f1, open(out2, "rb") as f2:
        assert f1.read() == f2.read()
    with open(out1) as fh:
        header = fh.readline().strip()
    assert header == "time,e_1,e_2,i_L1,i_V1"


def test_simulate_missing_dt_is_usage_error(runner):
    result = runner.invoke(
        main, ["simulate", os.path.join(CIRCUITS, "rl_series.cir"), "--t-end", "1.0", "--out", "x"]
    )
    assert result.exit_code == 2
    assert "--dt" in result.output


def test_experiment_requires_decreasing_dt_list(runner, tmp_path):
    src = os.path.join(CIRCUITS, "experiment_voltage.cir")
    result = runner.invoke(
        main,
        ["experiment", "perturbation", src, "--dt-list", "", "--out-dir", str(tmp_path)],
    )
    assert result.exit_code == 1
    result = runner.invoke(
        main,
        ["experiment", "perturbation", src, "--dt-list", "1e-5,2e-5", "--out-dir", str(tmp_path)],
    )
    assert result.exit_code == 1


def test_experiment_short_run_writes_outputs(runner, tmp_path):
    src = os.path.join(CIRCUITS, "experiment_voltage.cir")
    out = tmp_path / "exp"
    result = runner.invoke(
        main,
        [
            "experiment",
            "perturbation",
            src,
            "--dt-list",
            "4e-4,2e-4",
            "--t-end",
            "0.02",
            "--out-dir",
            str(out),
        ],
    )
    assert result.exit_code == 0, result.output
    files = sorted(os.listdir(out))
    assert "summary.csv" in files
    assert any(f.startswith("base_dt") for f in files)
    assert any(f.startswith("pert_dt") for f in files)
    assert "verdict:" in result.output


def test_field_verify_shipped_spec(runner):
    result = runner.invoke(main, ["field", "verify", os.path.join(CIRCUITS, "coil.fs")])
    assert result.exit_code == 0, result.output
    assert "FAIL" not in result.output


def test_field_verify_astar_spec(runner):
    result = runner.invoke(main, ["field", "verify", os.path.join(CIRCUITS, "coil_astar.fs")])
    assert result.exit_code == 0, result.output


def test_field_verify_coil_overlapping_conductor(runner, tmp_path):
    text = fieldspec_text(2, conductor=(1, 0, 0, 2, 1, 1))
    path = _write(tmp_path, "bad.fs", text)
    result = runner.invoke(main, ["field", "verify", path])
    assert result.exit_code == 1
    assert "overlap" in result.output


def test_field_inductance_prints_matrix(runner):
    result = runner.invoke(main, ["field", "inductance", os.path.join(CIRCUITS, "coil.fs")])
    assert result.exit_code == 0, result.output
    assert "smallest eigenvalue" in result.output
    assert "formulation: tomega" in result.output


def test_field_spec_parse_error_exit_1(runner, tmp_path):
    path = _write(tmp_path, "bad.fs", "grid.nx = \n")
    result = runner.invoke(main, ["field", "verify", path])
    assert result.exit_code == 1
