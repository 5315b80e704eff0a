"""
Scenario runners behind the ``run`` and ``sweep`` subcommands.
"""
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from pydantic import ValidationError

import dynamics
import export
import fermion
import network
from config import get_settings
from errors import ConfigError, InfeasibleError, LabError, VERIFY_FAILED_STATUS
from schemas import (
    EngineKind,
    ExperimentRecord,
    PenaltyEnergies,
    RunSummary,
    ScenarioConfig,
    ScenarioKind,
    SweepAxis,
    SweepConfig,
    SweepRow,
    TrajectoryRow,
)
from tensor_core import StateVector

logger = logging.getLogger(__name__)

FERMION_TOLERANCES = {
    "anticommutation": 1e-14,
    "spectrum": 1e-12,
    "commutator": 1e-12,
    "energy": 1e-10,
}


@dataclass(frozen=True, eq=False)
class ScenarioResult:
    config: ScenarioConfig
    summary: RunSummary
    trajectory: Optional[dynamics.Trajectory] = None
    subsystem_names: Sequence[str] = ()
    experiment: Optional[ExperimentRecord] = None
    exit_status: int = 0

    @property
    def columns(self) -> List[str]:
        if self.trajectory is None:
            return []
        return export.trajectory_columns(self.trajectory.labels, self.trajectory.dims, self.subsystem_names)

    @property
    def rows(self) -> List[TrajectoryRow]:
        if self.trajectory is None:
            return []
        return export.trajectory_rows(self.trajectory)

    def metadata(self) -> Dict[str, Any]:
        meta = {
            "config": json.loads(self.config.normalized()),
            "summary": self.summary.model_dump(mode="json"),
        }
        if self.experiment is not None:
            meta["experiment"] = self.experiment.model_dump(mode="json")
        return meta


def default_energies(config: ScenarioConfig) -> PenaltyEnergies:
    return config.energies or PenaltyEnergies.uniform(get_settings().default_energy)


def _run_engine(setup: dynamics.ScenarioSetup, config: ScenarioConfig) -> dynamics.Trajectory:
    cfg = config.engine_config(drive_target=setup.target.subsystem)
    if config.engine == EngineKind.zeno:
        return dynamics.evolve_zeno(setup.state0, setup.local_drive, setup.projector, cfg)
    if config.engine == EngineKind.generator:
        return dynamics.evolve_generator(setup.state0, setup.generator, cfg)
    return dynamics.evolve_variational(setup.state0, setup.target, setup.projector, cfg)


def _summarize(
    config: ScenarioConfig,
    traj: dynamics.Trajectory,
    reference: Optional[dynamics.Reference],
    **extra_fields,
) -> RunSummary:
    energies = [r.energy for r in traj.observables if r.energy is not None]
    terminal = None
    error = None
    if reference is not None:
        terminal = traj.final.fidelity(reference(float(traj.times[-1])))
        error = dynamics.trajectory_error(traj, reference)
    return RunSummary(
        kind=config.kind.value,
        engine=extra_fields.pop("engine", config.engine.value),
        steps=len(traj.times) - 1,
        terminal_fidelity=terminal,
        fidelity_to_initial=traj.final.fidelity(traj.initial),
        trajectory_error=error,
        max_energy=float(np.max(np.abs(energies))) if energies else None,
        survival=float(traj.survival[-1]),
        **extra_fields,
    )


def run_triplet(config: ScenarioConfig) -> ScenarioResult:
    setup = dynamics.triplet_setup(config.theta0, config.omega)
    traj = _run_engine(setup, config)
    traj = traj.with_observables(dynamics.observables(traj, None, setup.reference))
    return ScenarioResult(config, _summarize(config, traj, setup.reference), traj, ("1", "2"))


def run_not_gate(config: ScenarioConfig) -> ScenarioResult:
    setup = dynamics.not_gate_setup(config.theta0, config.omega)
    h_rs = fermion.EMBEDDING.lower_hamiltonian(fermion.penalty_hamiltonian(default_energies(config)))
    traj = _run_engine(setup, config)
    traj = traj.with_observables(dynamics.observables(traj, h_rs, setup.reference))
    summary = _summarize(config, traj, setup.reference)
    return ScenarioResult(config, summary, traj, ("r", "s"))


def run_fermion_check(config: ScenarioConfig) -> ScenarioResult:
    """Algebraic identities plus <H_rs> along the lifted NOT-gate trajectory."""
    energies = default_energies(config)
    setup = dynamics.not_gate_setup(config.theta0, config.omega)
    qubit_traj = _run_engine(setup, config)
    lifted = [fermion.EMBEDDING.lift_state(s) for s in qubit_traj.states]
    traj = dynamics.Trajectory(qubit_traj.engine, qubit_traj.times, lifted, qubit_traj.survival)

    def reference(t: float) -> StateVector:
        return fermion.EMBEDDING.lift_state(setup.reference(t))

    h_rs = fermion.penalty_hamiltonian(energies)
    traj = traj.with_observables(dynamics.observables(traj, h_rs, reference))

    expected = np.sort([0.0, 0.0, *energies.as_tuple()])
    residuals = {
        "anticommutation": max(fermion.anticommutation_residuals().values()),
        "spectrum": float(np.max(np.abs(fermion.sector_spectrum(energies) - expected))),
        "commutator": fermion.commutator_check(energies, config.omega),
        "energy": float(max(abs(r.energy) for r in traj.observables)),
    }
    failed = [name for name, value in residuals.items() if value > FERMION_TOLERANCES[name]]
    summary = _summarize(
        config,
        traj,
        reference,
        status="ok" if not failed else "check-failed",
        message="" if not failed else "failed: " + ", ".join(failed),
        extra=residuals,
    )
    return ScenarioResult(
        config, summary, traj, fermion.MODE_NAMES, exit_status=0 if not failed else VERIFY_FAILED_STATUS
    )


def run_polarizer(config: ScenarioConfig) -> ScenarioResult:
    result = dynamics.polarizer_drag(config.steps, config.angle)
    closed_form = math.cos(config.angle / config.steps) ** (2 * config.steps)

    def reference(angle: float) -> StateVector:
        return StateVector.from_amplitudes([math.cos(angle), math.sin(angle)])

    traj = result.trajectory.with_observables(dynamics.observables(result.trajectory, None, reference))
    summary = RunSummary(
        kind=config.kind.value,
        engine="projector",
        steps=config.steps,
        terminal_fidelity=result.final_state.fidelity(reference(config.angle)),
        fidelity_to_initial=result.final_state.fidelity(traj.initial),
        survival=result.survival,
        extra={"closed_form_survival": closed_form},
    )
    return ScenarioResult(config, summary, traj, ("q",))


def _network_for(config: ScenarioConfig) -> network.ConstraintNetwork:
    if config.network is not None:
        return network.load_network(config.network)
    return network.not_chain(config.chain_length)


def run_network(config: ScenarioConfig) -> ScenarioResult:
    net = _network_for(config)
    cfg = config.engine_config(drive_target=net.n_qubits - 1)
    outcome = network.run_drive_output(net, cfg, config.driven_qubit, config.target_bit, config.theta0)
    record = outcome.record
    if outcome.trajectory is None:
        summary = RunSummary(kind=config.kind.value, engine=config.engine.value, status=record.status)
        return ScenarioResult(
            config, summary, experiment=record, exit_status=InfeasibleError.exit_status
        )
    traj = outcome.trajectory
    h_net = network.network_penalty_hamiltonian(net.without_pins_on(record.driven_qubit))
    traj = traj.with_observables(dynamics.observables(traj, h_net, None))
    summary = _summarize(
        config,
        traj,
        None,
        status=record.status,
        t_star=record.t_star,
        extra={
            "terminal_success": record.terminal_success,
            "max_violation": record.max_violation,
            "arrival_time": record.arrival_time,
        },
    )
    names = [f"q{i}" for i in range(net.n_qubits)]
    return ScenarioResult(config, summary, traj, names, experiment=record)


RUNNERS = {
    ScenarioKind.triplet: run_triplet,
    ScenarioKind.not_gate: run_not_gate,
    ScenarioKind.fermion_check: run_fermion_check,
    ScenarioKind.polarizer: run_polarizer,
    ScenarioKind.network: run_network,
}


def run_scenario(config: ScenarioConfig) -> ScenarioResult:
    result = RUNNERS[config.kind](config)
    logger.info("%s", result.summary.summary_line())
    return result


def save_result(result: ScenarioResult, path: Optional[str] = None, fmt=None):
    path = path or result.config.output
    if path is None:
        return None
    fmt = fmt or result.config.format
    if result.trajectory is None:
        export.write_table_json(path, [result.experiment], result.metadata())
    else:
        export.write_trajectory(path, fmt, result.columns, result.rows, result.metadata())
    return path


def load_config(path: str) -> ScenarioConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    try:
        return ScenarioConfig.model_validate_json(text)
    except ValidationError as e:
        raise ConfigError(f"invalid scenario config {path}: {e}") from e


# Sweeps
def build_sweep(template: ScenarioConfig, axis: str, values: Sequence[float]) -> SweepConfig:
    try:
        return SweepConfig(template=template, axis=axis, values=list(values))
    except ValidationError as e:
        raise ConfigError(f"invalid sweep: {e}") from e


def _staging_path(output: str, axis: SweepAxis, index: int) -> str:
    p = Path(output)
    return str(p.with_name(f"{p.stem}.{axis.value}{index}{p.suffix}"))


def sweep_variant(sweep_cfg: SweepConfig, index: int) -> ScenarioConfig:
    value = sweep_cfg.values[index]
    template = sweep_cfg.template
    if sweep_cfg.axis == SweepAxis.k:
        if value != int(value):
            raise ConfigError(f"chain length {value!r} is not an integer")
        update = {"chain_length": int(value), "network": None}
    else:
        update = {sweep_cfg.axis.value: value}
    if template.output:
        update["output"] = _staging_path(template.output, sweep_cfg.axis, index)
    try:
        return ScenarioConfig.model_validate({**template.model_dump(), **update})
    except ValidationError as e:
        raise ConfigError(f"invalid sweep value {value!r}: {e}") from e


@dataclass
class SweepResult:
    config: SweepConfig
    rows: List[SweepRow]
    order: Optional[float] = None
    t_star_spread: Optional[float] = None
    results: List[Optional[ScenarioResult]] = field(default_factory=list)

    @property
    def failed(self) -> List[SweepRow]:
        return [r for r in self.rows if r.exit_status != 0]

    @property
    def exit_status(self) -> int:
        return self.failed[0].exit_status if self.failed else 0


def _sweep_one(sweep_cfg: SweepConfig, index: int):
    value = sweep_cfg.values[index]
    base = {"axis": sweep_cfg.axis.value, "value": value}
    try:
        config = sweep_variant(sweep_cfg, index)
        result = run_scenario(config)
        written = save_result(result)
    except LabError as e:
        logger.warning("sweep %s=%r failed: %s", sweep_cfg.axis.value, value, e)
        return SweepRow(status=e.code, exit_status=e.exit_status, message=str(e), **base), None
    s = result.summary
    row = SweepRow(
        status=s.status,
        exit_status=result.exit_status,
        terminal_fidelity=s.terminal_fidelity,
        trajectory_error=s.trajectory_error,
        t_star=s.t_star,
        max_energy=s.max_energy,
        survival=s.survival,
        output=written,
        message=s.message,
        **base,
    )
    return row, result


def sweep(sweep_cfg: SweepConfig, workers: Optional[int] = None) -> SweepResult:
    """One run per value, run concurrently; rows come back in value order."""
    workers = workers or get_settings().sweep_workers
    with ThreadPoolExecutor(max_workers=workers) as pool:
        outcomes = list(pool.map(lambda i: _sweep_one(sweep_cfg, i), range(len(sweep_cfg.values))))
    rows = [row for row, _ in outcomes]
    result = SweepResult(sweep_cfg, rows, results=[r for _, r in outcomes])
    ok = [r for r in rows if r.exit_status == 0]
    if sweep_cfg.axis == SweepAxis.dt and ok and all(r.trajectory_error is not None for r in ok):
        result.order = dynamics.convergence_order([r.value for r in ok], [r.trajectory_error for r in ok])
    if sweep_cfg.axis == SweepAxis.k and ok:
        times = [r.t_star for r in ok if r.t_star is not None]
        if len(times) == len(ok):
            result.t_star_spread = max(times) - min(times)
    if result.failed:
        logger.warning("%d of %d sweep runs failed", len(result.failed), len(rows))
    return result
