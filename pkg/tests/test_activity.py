from activity import get_run_logs, log_run
from schemas import RunSummary, ScenarioConfig


def test_log_and_list(db_session):
    config = ScenarioConfig(kind="triplet", dt=0.05)
    summary = RunSummary(kind="triplet", engine="generator", steps=31, terminal_fidelity=1.0, survival=1.0)
    first = log_run(db_session, config, summary, kind="ledger-order")
    second = log_run(db_session, config, None, status="DEGENERATE_OPTIMUM", exit_status=3,
                     message="no prior weight", kind="ledger-order")

    logs = get_run_logs(db_session, kind="ledger-order")
    assert [log.id for log in logs] == [second.id, first.id]
    assert logs[0].status == "DEGENERATE_OPTIMUM"
    assert logs[0].terminal_fidelity is None
    assert logs[1].terminal_fidelity == 1.0
    assert logs[1].config_json == config.normalized()


def test_kind_filter_and_limit(db_session):
    config = ScenarioConfig(kind="polarizer", steps=3)
    for _ in range(3):
        log_run(db_session, config, kind="ledger-limit")
    assert len(get_run_logs(db_session, limit=2, kind="ledger-limit")) == 2
    assert all(log.kind == "ledger-limit" for log in get_run_logs(db_session, kind="ledger-limit"))
