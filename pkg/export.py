"""
Trajectory and table writers.

Column order for trajectories: t, re[label] and im[label] per basis label,
diag<sub>[v] per subsystem value, energy, survival, fidelity. Floats go out
via repr, so identical runs give identical bytes.
"""
import csv
import io
import json
import logging
from typing import Any, Dict, List, Optional, Sequence

from openpyxl import Workbook
from openpyxl.styles import Alignment, Font, PatternFill

from config import APP_NAME, APP_VERSION
from errors import OutputError
from schemas import OutputFormat, TrajectoryRow

logger = logging.getLogger(__name__)

HEADER_FILL = PatternFill(start_color="4472C4", end_color="4472C4", fill_type="solid")
HEADER_FONT = Font(bold=True, color="FFFFFF")
HEADER_ALIGNMENT = Alignment(horizontal="center", vertical="center")


def trajectory_rows(traj, records=None) -> List[TrajectoryRow]:
    """Flatten a trajectory (and its observable records) into export rows."""
    records = list(records if records is not None else traj.observables)
    rows = []
    for k, (t, state) in enumerate(zip(traj.times, traj.states)):
        rec = records[k] if records else None
        diag = [list(map(float, d)) for d in rec.diagonals] if rec else [
            list(map(float, state.marginal(i))) for i in range(len(state.dims))
        ]
        rows.append(
            TrajectoryRow(
                t=float(t),
                re=[float(a.real) for a in state.amplitudes],
                im=[float(a.imag) for a in state.amplitudes],
                diag=diag,
                energy=rec.energy if rec else None,
                survival=float(traj.survival[k]),
                fidelity=rec.fidelity if rec else None,
            )
        )
    return rows


def trajectory_columns(labels: Sequence[str], dims: Sequence[int], names: Optional[Sequence[str]] = None) -> List[str]:
    names = list(names) if names is not None else [str(i) for i in range(len(dims))]
    columns = ["t"]
    for label in labels:
        columns += [f"re[{label}]", f"im[{label}]"]
    for name, d in zip(names, dims):
        columns += [f"diag{name}[{v}]" for v in range(d)]
    return columns + ["energy", "survival", "fidelity"]


def _flatten(row: TrajectoryRow) -> List[Any]:
    values: List[Any] = [row.t]
    for re, im in zip(row.re, row.im):
        values += [re, im]
    for diag in row.diag:
        values += diag
    return values + [row.energy, row.survival, row.fidelity]


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_text(path: str, text: str):
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}") from e


def _csv_text(columns: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def write_csv(path: str, columns: Sequence[str], rows: Sequence[TrajectoryRow]):
    _write_text(path, _csv_text(columns, [_flatten(r) for r in rows]))


def write_json(path: str, columns: Sequence[str], rows: Sequence[TrajectoryRow], metadata: Dict[str, Any]):
    body = {
        "metadata": {"app": APP_NAME, "version": APP_VERSION, "columns": list(columns), **metadata},
        "rows": [dict(zip(columns, _flatten(r))) for r in rows],
    }
    _write_text(path, json.dumps(body, sort_keys=True, indent=1) + "\n")


def _styled_sheet(ws, headers: Sequence[str]):
    for col_num, header in enumerate(headers, 1):
        cell = ws.cell(row=1, column=col_num)
        cell.value = header
        cell.fill = HEADER_FILL
        cell.font = HEADER_FONT
        cell.alignment = HEADER_ALIGNMENT


def write_xlsx(path: str, columns: Sequence[str], rows: Sequence[TrajectoryRow], metadata: Dict[str, Any]):
    wb = Workbook()
    ws = wb.active
    ws.title = "trajectory"
    _styled_sheet(ws, columns)
    for row_num, row in enumerate(rows, 2):
        for col_num, value in enumerate(_flatten(row), 1):
            ws.cell(row=row_num, column=col_num, value=value)
    for col_num in range(1, len(columns) + 1):
        ws.column_dimensions[ws.cell(row=1, column=col_num).column_letter].width = 16

    meta = wb.create_sheet("metadata")
    _styled_sheet(meta, ["key", "value"])
    items = {"app": APP_NAME, "version": APP_VERSION, **metadata}
    for row_num, key in enumerate(sorted(items), 2):
        value = items[key]
        meta.cell(row=row_num, column=1, value=key)
        meta.cell(row=row_num, column=2, value=value if isinstance(value, (int, float, str)) else json.dumps(value))
    meta.column_dimensions["A"].width = 20
    meta.column_dimensions["B"].width = 60
    try:
        wb.save(path)
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}") from e


def write_trajectory(path: str, fmt: OutputFormat, columns, rows, metadata: Dict[str, Any]):
    if fmt == OutputFormat.csv:
        write_csv(path, columns, rows)
    elif fmt == OutputFormat.json:
        write_json(path, columns, rows, metadata)
    else:
        write_xlsx(path, columns, rows, metadata)
    logger.info("wrote %d rows to %s", len(rows), path)


def write_table_csv(path: str, records: Sequence, columns: Optional[Sequence[str]] = None):
    """Sweep and scaling tables: one pydantic record per row."""
    dumped = [r.model_dump() for r in records]
    columns = list(columns) if columns else (list(dumped[0]) if dumped else [])
    _write_text(path, _csv_text(columns, [[d.get(c) for c in columns] for d in dumped]))


def write_table_json(path: str, records: Sequence, metadata: Dict[str, Any]):
    body = {
        "metadata": {"app": APP_NAME, "version": APP_VERSION, **metadata},
        "rows": [r.model_dump(mode="json") for r in records],
    }
    _write_text(path, json.dumps(body, sort_keys=True, indent=1) + "\n")
