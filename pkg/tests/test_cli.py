import subprocess
import sys

import pytest

from hdm import cli, tables
from hdm.study import read_csv


def test_run_writes_csv(tmp_path, capsys):
    out = tmp_path / "ns.csv"
    code = cli.main(["run", "--problem", "ns", "--method", "morley", "--levels", "3", "--out", str(out)])
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].startswith("h,nu,err_u") and len(lines) == 4
    assert [r["nu"] for r in read_csv(out)] == ["5", "25", "113"]


def test_run_with_config_and_override(tmp_path, capsys):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("problem = vk\nmethod = gr\nlevels = 4\n")
    assert cli.main(["run", "--config", str(cfg), "--levels", "2", "--diagnostics"]) == 0
    out = capsys.readouterr().out
    assert "err_hess_v" in out and "coercivity_l2" in out
    assert len(out.split("\n\n")[0].splitlines()) == 3


@pytest.mark.parametrize("argv", [
    [],
    ["run", "--method", "argyris"],
    ["run", "--levels", "two"],
    ["run", "--method", "adini", "--domain", "lshape"],
    ["run", "--domain", "lshape", "--problem", "ns"],
    ["verify-tables", "--tables", "1,7"],
    ["verify-tables", "--tables", "x"],
])
def test_bad_arguments_exit_with_one(argv, capsys):
    try:
        code = cli.main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_unknown_config_key_exits_with_one(tmp_path, capsys):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("solverr = newton\n")
    assert cli.main(["run", "--config", str(cfg)]) == 1
    assert "solverr" in capsys.readouterr().err


def test_verify_mismatch_exits_with_two(monkeypatch, tmp_path, capsys):
    real = tables.verify

    def failing(table_id, report, runtime_limit=60.0):
        checks = real(table_id, report, runtime_limit)
        return checks + [tables.Check("injected mismatch", False, "forced")]
    monkeypatch.setattr(tables, "verify", failing)
    code = cli.main(["verify-tables", "--tables", "3", "--out-dir", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == 2 and "1 check(s) failed" in out
    assert (tmp_path / "table3.csv").exists()


def test_verify_single_table_passes(capsys):
    assert cli.main(["verify-tables", "--tables", "3"]) == 0
    assert "all checks passed" in capsys.readouterr().out


def test_diagnose(tmp_path, capsys):
    out = tmp_path / "d.csv"
    assert cli.main(["diagnose", "--method", "gr", "--levels", "2", "--samples", "10", "--out", str(out)]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].startswith("h,ndof") and len(lines) == 3
    assert out.read_text().splitlines() == lines


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "hdm.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "verify-tables" in res.stdout
