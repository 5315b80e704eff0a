import json

import pytest

from config import get_settings, reload_settings
from main import main

PIN_CONFLICT = "NOT q0 q1\nPIN q0 1\nPIN q1 1\n"


class TestVerify:
    def test_passes(self, capsys):
        assert main(["verify"]) == 0
        out = capsys.readouterr().out
        assert "FAIL" not in out
        assert out.count("PASS") == 16

    def test_json_report(self, capsys):
        assert main(["verify", "--json"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert all(item["passed"] for item in report["items"])

    def test_sign_flip_fails(self, capsys):
        assert main(["verify", "--sign-flip"]) == 8
        assert "FAIL" in capsys.readouterr().out


class TestRun:
    def test_polarizer(self, capsys):
        assert main(["run", "polarizer", "--steps", "1000"]) == 0
        assert "survival=0.9975" in capsys.readouterr().out

    def test_not_gate_reaches_one_zero(self, tmp_path, capsys):
        path = tmp_path / "not_gate.json"
        argv = ["run", "not-gate", "--engine", "generator", "--omega", "1", "--T", "1.5708", "--theta0", "0",
                "--output", str(path), "--format", "json"]
        assert main(argv) == 0
        assert f"wrote {path}" in capsys.readouterr().out
        last = json.loads(path.read_text(encoding="utf-8"))["rows"][-1]
        weight = last["re[|1⟩_r|0⟩_s]"] ** 2 + last["im[|1⟩_r|0⟩_s]"] ** 2
        assert weight >= 0.9999

    def test_missing_kind(self, capsys):
        assert main(["run"]) == 2
        assert "kind" in capsys.readouterr().err

    def test_config_file_with_override(self, tmp_path, capsys):
        path = tmp_path / "polarizer.json"
        path.write_text('{"kind": "polarizer", "steps": 5}', encoding="utf-8")
        assert main(["run", "--config", str(path), "--steps", "1000"]) == 0
        assert "steps=1000" in capsys.readouterr().out

    def test_malformed_network(self, tmp_path, capsys):
        path = tmp_path / "bad.net"
        path.write_text("NOT q0 q1\nBAD q0\n", encoding="utf-8")
        assert main(["run", "network", "--network", str(path)]) == 2
        assert "line 2" in capsys.readouterr().err

    def test_pin_conflict(self, tmp_path, capsys):
        path = tmp_path / "conflict.net"
        path.write_text(PIN_CONFLICT, encoding="utf-8")
        assert main(["run", "network", "--network", str(path)]) == 5
        assert "unsatisfiable-with-pin" in capsys.readouterr().out

    def test_degenerate_optimum(self, capsys):
        argv = ["run", "not-gate", "--engine", "variational", "--theta0", "0", "--no-enforce"]
        assert main(argv) == 3
        assert "DEGENERATE_OPTIMUM" in capsys.readouterr().err


class TestSweep:
    def test_empty_values(self, capsys):
        assert main(["sweep", "triplet", "--axis", "dt"]) == 2
        assert "error" in capsys.readouterr().err

    def test_dt_sweep_table(self, tmp_path, capsys):
        path = tmp_path / "sweep.csv"
        argv = ["sweep", "triplet", "--engine", "variational", "--theta0", "0.5235987755982988", "--T", "0.4",
                "--axis", "dt", "--values", "1e-2", "5e-3", "2.5e-3", "--output", str(path), "--workers", "2"]
        assert main(argv) == 0
        assert "convergence order" in capsys.readouterr().out
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0].startswith("axis,value,status")
        assert len(lines) == 4


class TestCompareAndHistory:
    def test_compare(self, capsys):
        assert main(["compare", "triplet"]) == 0
        record = json.loads(capsys.readouterr().out)
        assert record["a_matches_b"] is True

    def test_history_lists_recorded_runs(self, capsys):
        assert main(["run", "polarizer", "--steps", "7"]) == 0
        capsys.readouterr()
        assert main(["history", "--json", "--kind", "polarizer"]) == 0
        logs = json.loads(capsys.readouterr().out)
        assert logs
        assert json.loads(logs[0]["config_json"])["steps"] == 7


def test_bad_environment(monkeypatch, capsys):
    monkeypatch.setenv("LAB_SWEEP_WORKERS", "0")
    get_settings.cache_clear()
    try:
        assert main(["verify"]) == 2
        assert "sweep_workers" in capsys.readouterr().err
    finally:
        monkeypatch.undo()
        reload_settings()


@pytest.mark.parametrize("argv", [["--version"], ["run", "--help"]])
def test_help_and_version_exit_cleanly(argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 0
