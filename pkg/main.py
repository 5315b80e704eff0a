"""
Command line for the projection lab.

  run KIND      one scenario (triplet, not-gate, fermion-check, polarizer, network)
  sweep KIND    one run per value of dt, k or theta0, merged into a table
  verify        algebraic identity suite
  compare       zeno / generator / variational divergence record
  history       recent rows of the run ledger

Exit statuses follow errors.py; a failed identity check exits with 8.
"""
import argparse
import json
import logging
import sys
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

import export
import scenarios
from activity import get_run_logs, log_run
from config import APP_NAME, APP_VERSION, get_settings
from database import SessionLocal, init_db
from dynamics import SCENARIOS, divergence_report
from errors import ConfigError, LabError, VERIFY_FAILED_STATUS
from schemas import EngineKind, OutputFormat, PenaltyEnergies, RunSummary, ScenarioConfig, ScenarioKind, SweepAxis
from verify import run_identity_suite

logger = logging.getLogger(__name__)

# flag dest -> ScenarioConfig field
SCENARIO_FLAGS = {
    "engine": "engine",
    "dt": "dt",
    "T": "T",
    "omega": "omega",
    "theta0": "theta0",
    "network": "network",
    "chain": "chain_length",
    "driven_qubit": "driven_qubit",
    "target_bit": "target_bit",
    "steps": "steps",
    "angle": "angle",
    "output": "output",
    "format": "format",
}


def _add_scenario_flags(p: argparse.ArgumentParser, output_help: str):
    p.add_argument("kind", nargs="?", choices=[k.value for k in ScenarioKind], help="scenario to run")
    p.add_argument("--config", help="scenario config file (JSON); flags override its fields")
    p.add_argument("--engine", choices=[e.value for e in EngineKind])
    p.add_argument("--dt", type=float)
    p.add_argument("--T", type=float, dest="T", help="total time")
    p.add_argument("--omega", type=float)
    p.add_argument("--theta0", type=float)
    p.add_argument("--no-enforce", action="store_true", help="drop the subspace condition (variational engine)")
    p.add_argument("--energies", type=float, nargs=4, metavar=("EA", "EB", "EC", "ED"))
    p.add_argument("--network", help="network description file")
    p.add_argument("--chain", type=int, help="NOT chain length instead of a network file")
    p.add_argument("--driven-qubit", type=int, dest="driven_qubit")
    p.add_argument("--target-bit", type=int, dest="target_bit", choices=[0, 1])
    p.add_argument("--steps", type=int, help="polarizer filter count")
    p.add_argument("--angle", type=float, help="polarizer total angle")
    p.add_argument("--output", help=output_help)
    p.add_argument("--format", choices=[f.value for f in OutputFormat])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=APP_NAME, description="Continuous projection lab")
    parser.add_argument("--version", action="version", version=f"{APP_NAME} {APP_VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario")
    _add_scenario_flags(run, "trajectory output file")

    sweep = sub.add_parser("sweep", help="run a scenario over a list of values")
    _add_scenario_flags(sweep, "merged sweep table")
    sweep.add_argument("--axis", required=True, choices=[a.value for a in SweepAxis])
    sweep.add_argument("--values", type=float, nargs="*", default=[])
    sweep.add_argument("--stage", help="per-run trajectory file; each value gets its own suffixed copy")
    sweep.add_argument("--workers", type=int)

    verify = sub.add_parser("verify", help="run the identity suite")
    verify.add_argument("--json", action="store_true", help="machine-readable report")
    verify.add_argument("--sign-flip", action="store_true", help=argparse.SUPPRESS)

    compare = sub.add_parser("compare", help="compare the three engines on one scenario")
    compare.add_argument("scenario", choices=sorted(SCENARIOS))
    compare.add_argument("--dt", type=float, default=1e-3)
    compare.add_argument("--T", type=float, dest="T")
    compare.add_argument("--theta0", type=float)
    compare.add_argument("--omega", type=float, default=1.0)

    history = sub.add_parser("history", help="list recorded runs")
    history.add_argument("--limit", type=int, default=20)
    history.add_argument("--kind")
    history.add_argument("--json", action="store_true")
    return parser


def config_from_args(args) -> ScenarioConfig:
    """Config file (if any) overlaid with the flags that were given."""
    values: Dict[str, Any] = {}
    if args.config:
        values = scenarios.load_config(args.config).model_dump()
    for dest, field in SCENARIO_FLAGS.items():
        value = getattr(args, dest, None)
        if value is not None:
            values[field] = value
    if args.kind:
        values["kind"] = args.kind
    if args.no_enforce:
        values["enforce_subspace"] = False
    if args.energies:
        values["energies"] = dict(zip(("e_a", "e_b", "e_c", "e_d"), args.energies))
    if "kind" not in values:
        raise ConfigError("a scenario kind is required (positional or in --config)")
    try:
        return ScenarioConfig.model_validate(values)
    except ValidationError as e:
        raise ConfigError(f"invalid scenario: {e}") from e


def _record(config: ScenarioConfig, summary: Optional[RunSummary], status: str, exit_status: int, message=None):
    if not get_settings().record_runs:
        return
    try:
        init_db()
        db = SessionLocal()
        try:
            log_run(db, config, summary, status=status, exit_status=exit_status, message=message)
        finally:
            db.close()
    except Exception as e:
        logger.warning("could not record run in the ledger: %s", e)


def cmd_run(args) -> int:
    config = config_from_args(args)
    try:
        result = scenarios.run_scenario(config)
        written = scenarios.save_result(result)
    except LabError as e:
        _record(config, None, e.code, e.exit_status, str(e))
        raise
    print(result.summary.summary_line())
    if written:
        print(f"wrote {written}")
    _record(config, result.summary, result.summary.status, result.exit_status)
    return result.exit_status


def cmd_sweep(args) -> int:
    output = args.output
    args.output = args.stage
    template = config_from_args(args)
    sweep_cfg = scenarios.build_sweep(template, args.axis, args.values)
    result = scenarios.sweep(sweep_cfg, args.workers)

    for row, run in zip(result.rows, result.results):
        line = f"{row.axis}={row.value!r} {row.status}"
        if row.trajectory_error is not None:
            line += f" error={row.trajectory_error:.3e}"
        if row.t_star is not None:
            line += f" t*={row.t_star:.12g}"
        print(line)
        if run is not None:
            _record(run.config, run.summary, run.summary.status, run.exit_status)
        else:
            _record(template, None, row.status, row.exit_status, row.message)
    if result.order is not None:
        print(f"convergence order {result.order:.3f}")
    if result.t_star_spread is not None:
        print(f"t* spread {result.t_star_spread:.3e}")

    if output:
        if template.format == OutputFormat.json:
            meta = {"sweep": json.loads(sweep_cfg.model_dump_json()), "order": result.order,
                    "t_star_spread": result.t_star_spread}
            export.write_table_json(output, result.rows, meta)
        else:
            export.write_table_csv(output, result.rows)
        print(f"wrote {output}")
    return result.exit_status


def cmd_verify(args) -> int:
    report = run_identity_suite(PenaltyEnergies(), sign_flip=args.sign_flip)
    if args.json:
        print(report.model_dump_json(indent=1))
    else:
        for item in report.items:
            mark = "PASS" if item.passed else "FAIL"
            line = f"{mark} {item.name}"
            if item.residual is not None:
                line += f" residual={item.residual:.3e} tol={item.tolerance:.0e}"
            if item.detail and not item.passed:
                line += f" ({item.detail})"
            print(line)
    return 0 if report.passed else VERIFY_FAILED_STATUS


def cmd_compare(args) -> int:
    record = divergence_report(args.scenario, dt=args.dt, theta0=args.theta0, T=args.T, omega=args.omega)
    print(record.model_dump_json(indent=1))
    return 0


def cmd_history(args) -> int:
    init_db()
    db = SessionLocal()
    try:
        logs = get_run_logs(db, limit=args.limit, kind=args.kind)
    finally:
        db.close()
    if args.json:
        print(json.dumps([log.model_dump(mode="json") for log in logs], indent=1))
        return 0
    for log in logs:
        fid = "" if log.terminal_fidelity is None else f" fidelity={log.terminal_fidelity:.12g}"
        print(f"#{log.id} {log.created_at:%Y-%m-%d %H:%M:%S} {log.kind} [{log.engine}] {log.status}{fid}")
    return 0


COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
    "compare": cmd_compare,
    "history": cmd_history,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        settings = get_settings()
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_status
    logging.basicConfig(level=settings.log_level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except LabError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_status


if __name__ == "__main__":
    sys.exit(main())
