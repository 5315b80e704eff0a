import json
import math

import pytest

import scenarios
from errors import ConfigError, InfeasibleError
from schemas import ScenarioConfig

PIN_CONFLICT = "NOT q0 q1\nPIN q0 1\nPIN q1 1\n"


def config(**values) -> ScenarioConfig:
    return ScenarioConfig.model_validate(values)


class TestRunners:
    def test_triplet(self):
        result = scenarios.run_scenario(config(kind="triplet", theta0=math.pi / 6, T=1.0))
        assert result.summary.terminal_fidelity == pytest.approx(1.0, abs=1e-12)
        assert result.summary.steps == 100
        assert result.subsystem_names == ("1", "2")

    def test_not_gate_stays_in_ground_space(self):
        result = scenarios.run_scenario(config(kind="not-gate"))
        assert result.summary.max_energy == pytest.approx(0.0, abs=1e-14)
        assert result.summary.trajectory_error <= 1e-9

    def test_not_gate_zeno_freezes(self):
        result = scenarios.run_scenario(config(kind="not-gate", engine="zeno", dt=1e-3))
        assert result.summary.fidelity_to_initial == pytest.approx(1.0, abs=1e-12)
        assert result.summary.survival < 1.0

    def test_fermion_check(self):
        result = scenarios.run_scenario(config(kind="fermion-check", energies={"e_a": 1, "e_b": 2, "e_c": 3, "e_d": 4}))
        assert result.exit_status == 0
        assert result.summary.status == "ok"
        assert set(result.summary.extra) == set(scenarios.FERMION_TOLERANCES)
        assert len(result.columns) == 1 + 2 * 16 + 2 * 4 + 3

    def test_polarizer(self):
        result = scenarios.run_scenario(config(kind="polarizer", steps=1000))
        assert result.summary.survival == pytest.approx(result.summary.extra["closed_form_survival"], abs=1e-12)
        assert result.summary.terminal_fidelity == pytest.approx(1.0)

    def test_network_chain(self):
        result = scenarios.run_scenario(config(kind="network", chain_length=2, dt=1e-3))
        assert result.summary.status == "ok"
        assert result.summary.t_star == pytest.approx(math.pi / 4, rel=1e-12)
        assert result.experiment.max_violation <= 1e-12
        assert result.subsystem_names == ["q0", "q1", "q2"]

    def test_network_pin_conflict(self, tmp_path):
        path = tmp_path / "conflict.net"
        path.write_text(PIN_CONFLICT, encoding="utf-8")
        result = scenarios.run_scenario(config(kind="network", network=str(path)))
        assert result.trajectory is None
        assert result.summary.status == "unsatisfiable-with-pin"
        assert result.exit_status == InfeasibleError.exit_status
        out = tmp_path / "conflict.json"
        scenarios.save_result(result, str(out))
        body = json.loads(out.read_text(encoding="utf-8"))
        assert body["rows"][0]["status"] == "unsatisfiable-with-pin"


class TestOutput:
    @pytest.mark.parametrize("fmt", ["csv", "json"])
    def test_repeated_runs_are_byte_identical(self, tmp_path, fmt):
        path = tmp_path / f"run.{fmt}"
        cfg = config(kind="triplet", engine="variational", theta0=math.pi / 6, T=0.4, output=str(path), format=fmt)
        contents = []
        for _ in range(2):
            scenarios.save_result(scenarios.run_scenario(cfg))
            contents.append(path.read_bytes())
        assert contents[0] == contents[1]

    def test_no_output_path(self):
        result = scenarios.run_scenario(config(kind="polarizer", steps=3))
        assert scenarios.save_result(result) is None

    def test_json_metadata(self, tmp_path):
        path = tmp_path / "not_gate.json"
        result = scenarios.run_scenario(config(kind="not-gate", output=str(path), format="json"))
        scenarios.save_result(result)
        body = json.loads(path.read_text(encoding="utf-8"))
        assert body["metadata"]["config"]["kind"] == "not-gate"
        assert body["metadata"]["summary"]["steps"] == result.summary.steps
        assert len(body["rows"]) == result.summary.steps + 1


class TestConfigFiles:
    def test_round_trip(self, tmp_path):
        cfg = config(kind="network", chain_length=3, engine="variational", dt=5e-3, target_bit=0)
        path = tmp_path / "scenario.json"
        path.write_text(cfg.normalized(), encoding="utf-8")
        assert scenarios.load_config(str(path)).normalized() == cfg.normalized()

    def test_invalid_file(self, tmp_path):
        path = tmp_path / "scenario.json"
        path.write_text('{"kind": "triplet", "dt": 2.0, "T": 1.0}', encoding="utf-8")
        with pytest.raises(ConfigError):
            scenarios.load_config(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            scenarios.load_config(str(tmp_path / "nope.json"))


class TestSweeps:
    def test_empty_sweep(self):
        with pytest.raises(ConfigError):
            scenarios.build_sweep(config(kind="triplet"), "dt", [])

    def test_k_sweep_needs_network(self):
        with pytest.raises(ConfigError):
            scenarios.build_sweep(config(kind="triplet"), "k", [2])

    def test_dt_sweep_reports_order(self):
        template = config(kind="triplet", engine="variational", theta0=math.pi / 6, T=0.4)
        result = scenarios.sweep(scenarios.build_sweep(template, "dt", [1e-2, 5e-3, 2.5e-3]), workers=2)
        assert result.exit_status == 0
        assert [r.value for r in result.rows] == [1e-2, 5e-3, 2.5e-3]
        assert result.order >= 0.9

    def test_failing_row_keeps_the_others(self):
        template = config(kind="not-gate", engine="variational", enforce_subspace=False)
        result = scenarios.sweep(scenarios.build_sweep(template, "theta0", [math.pi / 4, 0.0]), workers=2)
        assert result.rows[0].status == "ok"
        assert result.rows[1].status == "DEGENERATE_OPTIMUM"
        assert result.exit_status == 3
        assert result.results[1] is None

    def test_k_sweep(self, tmp_path):
        template = config(kind="network", chain_length=2, dt=1e-3, output=str(tmp_path / "chain.csv"))
        result = scenarios.sweep(scenarios.build_sweep(template, "k", [2, 3]), workers=2)
        assert result.exit_status == 0
        assert result.t_star_spread <= 1e-3
        assert (tmp_path / "chain.k0.csv").exists()
        assert (tmp_path / "chain.k1.csv").exists()

    def test_fractional_chain_length(self):
        template = config(kind="network", chain_length=2, dt=1e-2)
        result = scenarios.sweep(scenarios.build_sweep(template, "k", [2.5]), workers=1)
        assert result.rows[0].exit_status == ConfigError.exit_status
