import json

import pytest

from qgflow.cli import main
from qgflow.io import parse_report, read_diagnostics_csv, read_trajectory


@pytest.fixture
def small_cfg(tmp_path):
    p = tmp_path / "cfg.toml"
    p.write_text('n = 32\ndt = 0.01\nT = 1.0\nsnapshot_every = 10\ndatum = "annulus"\namplitude = 0.1\n'
                 f'output_dir = "{tmp_path / "out"}"\n')
    return p


def test_run_writes_outputs(small_cfg, tmp_path, capsys):
    assert main(["run", "--config", str(small_cfg)]) == 0
    out = tmp_path / "out"
    d = read_diagnostics_csv((out / "diagnostics.csv").read_text())
    assert {"time", "l2", "linf", "h1", "balance_residual", "balance_relative", "h1_margin"} <= set(d)
    assert len(read_trajectory(out / "run.qgt")) == 11
    assert (out / "final.qgsf").exists()
    assert "snapshots" in capsys.readouterr().out


def test_output_dir_flag(small_cfg, tmp_path):
    assert main(["run", "--config", str(small_cfg), "--output-dir", str(tmp_path / "elsewhere")]) == 0
    assert (tmp_path / "elsewhere" / "run.qgt").exists()


def test_picard(tmp_path):
    cfg = tmp_path / "p.toml"
    cfg.write_text(f'n = 32\nT = 0.25\npicard_nodes = 17\ndatum = "two_mode"\noutput_dir = "{tmp_path}"\n')
    assert main(["picard", "--config", str(cfg)]) == 0
    lines = (tmp_path / "picard_residuals.csv").read_text().splitlines()
    assert lines[0] == "iterate,residual" and len(lines) >= 3


def test_picard_not_converged_exits_nonzero(tmp_path):
    cfg = tmp_path / "p.toml"
    cfg.write_text(f'n = 32\nT = 0.25\npicard_nodes = 9\npicard_max_iters = 1\noutput_dir = "{tmp_path}"\n')
    assert main(["picard", "--config", str(cfg)]) == 1


def test_analyze_and_inspect(small_cfg, tmp_path, capsys):
    main(["run", "--config", str(small_cfg)])
    stem = tmp_path / "report"
    assert main(["analyze", "--traj", str(tmp_path / "out" / "run.qgt"), "--spec", str(small_cfg),
                 "--out", str(stem)]) == 0
    rep = parse_report((tmp_path / "report.json").read_bytes())
    assert rep.k_norm > 0 and rep.g_norm > 0
    assert len(rep.series["time"]) == 11
    csv_rep = parse_report((tmp_path / "report.csv").read_bytes(), "csv")
    assert len(csv_rep.series["radius"]) == 11
    capsys.readouterr()
    assert main(["inspect-snapshot", str(tmp_path / "out" / "final.qgsf")]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["n"] == 32 and info["time"] == 1.0 and info["gamma"] == 1.5


def test_verify_suite(capsys):
    assert main(["verify", "multipliers"]) == 0
    out = capsys.readouterr().out
    assert "PASS  transform_round_trip" in out and "passed" in out


def test_verify_tightened_tolerance_can_fail(capsys):
    assert main(["verify", "multipliers", "--tol", "parseval=0"]) == 1
    assert "FAIL  parseval" in capsys.readouterr().out


def test_verify_loosened_tolerance_is_an_error(capsys):
    assert main(["verify", "multipliers", "--tol", "parseval=1"]) == 1
    assert "only tighten" in capsys.readouterr().err


def test_unknown_suite_exit_2():
    with pytest.raises(SystemExit) as e:
        main(["verify", "everything"])
    assert e.value.code == 2


def test_bad_config_reports_all(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("gamma = 1.0\nalpha = 1.0\nn = 48\n")
    assert main(["run", "--config", str(cfg)]) == 1
    err = capsys.readouterr().err
    assert "1/4" in err and "power of two" in err


def test_threads_flag(small_cfg, monkeypatch):
    monkeypatch.delenv("QG_THREADS", raising=False)
    assert main(["--threads", "1", "run", "--config", str(small_cfg)]) == 0
    import os
    assert os.environ["QG_THREADS"] == "1"
