from typing import List, Optional

from sqlalchemy.orm import Session

import models
import schemas


def log_run(
    db: Session,
    config: schemas.ScenarioConfig,
    summary: Optional[schemas.RunSummary] = None,
    status: str = "ok",
    exit_status: int = 0,
    message: Optional[str] = None,
    kind: Optional[str] = None,
):
    """Record one scenario run in the ledger"""
    record = models.RunRecord(
        kind=kind or config.kind.value,
        engine=config.engine.value,
        status=status,
        exit_status=exit_status,
        config_json=config.normalized(),
        terminal_fidelity=summary.terminal_fidelity if summary else None,
        max_energy=summary.max_energy if summary else None,
        survival=summary.survival if summary else None,
        message=message if message is not None else (summary.message if summary else None),
    )
    db.add(record)
    db.commit()
    db.refresh(record)
    return record


def get_run_logs(db: Session, limit: int = 100, kind: Optional[str] = None) -> List[schemas.RunLog]:
    """Most recent ledger rows first"""
    query = db.query(models.RunRecord)
    if kind:
        query = query.filter(models.RunRecord.kind == kind)
    rows = query.order_by(
        models.RunRecord.created_at.desc(),
        models.RunRecord.id.desc()
    ).limit(limit).all()
    return [schemas.RunLog.model_validate(row) for row in rows]
