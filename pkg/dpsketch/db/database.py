import json
import logging
import sqlite3
from contextlib import contextmanager
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, Optional, Union

logger = logging.getLogger(__name__)

DB_PATH = Path("dpsketch.db")


def set_db_path(db_path: Union[str, Path]) -> None:
    global DB_PATH
    DB_PATH = Path(db_path)


def init_db(db_path: Optional[Union[str, Path]] = None) -> None:
    if db_path is not None:
        set_db_path(db_path)

    with get_connection() as conn:
        cur = conn.cursor()

        cur.execute(
            """
            CREATE TABLE IF NOT EXISTS runs (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                experiment TEXT NOT NULL,
                config_json TEXT NOT NULL,
                seed TEXT NOT NULL,
                status TEXT NOT NULL,
                error_message TEXT,
                row_count INTEGER DEFAULT 0,
                started_at TEXT NOT NULL,
                finished_at TEXT
            )
            """
        )

        cur.execute(
            """
            CREATE TABLE IF NOT EXISTS results (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                run_id INTEGER NOT NULL REFERENCES runs(id),
                variant TEXT NOT NULL,
                private TEXT NOT NULL,
                rho TEXT NOT NULL,
                space_kb TEXT NOT NULL,
                metric TEXT NOT NULL,
                value TEXT NOT NULL
            )
            """
        )

        conn.commit()


@contextmanager
def get_connection() -> Iterator[sqlite3.Connection]:
    conn = sqlite3.connect(DB_PATH)
    try:
        yield conn
    finally:
        conn.close()


def log_run_started(experiment: str, config: Dict[str, Any], seed: int) -> int:
    """Yangi ishga tushirishni yozish; run id qaytaradi."""
    now = datetime.utcnow().isoformat()

    with get_connection() as conn:
        cur = conn.cursor()
        cur.execute(
            """
            INSERT INTO runs (experiment, config_json, seed, status, started_at)
            VALUES (?, ?, ?, ?, ?)
            """,
            # seeds can exceed SQLite's signed 64-bit range
            (experiment, json.dumps(config, sort_keys=True, default=str), str(seed), "running", now),
        )
        conn.commit()
        run_id = cur.lastrowid

    logger.debug(f"Ledger: run {run_id} started ({experiment})")
    return run_id


def log_run_finished(
    run_id: int,
    status: str,
    row_count: int = 0,
    error_message: Optional[str] = None,
) -> None:
    now = datetime.utcnow().isoformat()

    with get_connection() as conn:
        cur = conn.cursor()
        cur.execute(
            """
            UPDATE runs SET status = ?, row_count = ?, error_message = ?, finished_at = ?
            WHERE id = ?
            """,
            (status, row_count, error_message, now, run_id),
        )
        conn.commit()

    logger.info(f"Ledger: run {run_id} finished with status {status}")


def log_results(run_id: int, rows: Iterable[Dict[str, str]]) -> int:
    """CSV qatorlarini results jadvaliga yozish."""
    records = [
        (run_id, r["variant"], r["private"], r["rho"], r["space_kb"], r["metric"], r["value"])
        for r in rows
    ]

    with get_connection() as conn:
        cur = conn.cursor()
        cur.executemany(
            """
            INSERT INTO results (run_id, variant, private, rho, space_kb, metric, value)
            VALUES (?, ?, ?, ?, ?, ?, ?)
            """,
            records,
        )
        conn.commit()

    return len(records)


def get_run_results(run_id: int) -> list:
    with get_connection() as conn:
        cur = conn.cursor()
        cur.execute(
            """
            SELECT variant, private, rho, space_kb, metric, value
            FROM results WHERE run_id = ? ORDER BY id
            """,
            (run_id,),
        )
        return cur.fetchall()


def get_detailed_stats(limit: int = 5) -> Dict[str, Any]:
    """Batafsil statistika olish."""
    with get_connection() as conn:
        cur = conn.cursor()

        # Asosiy statistika
        cur.execute("SELECT COUNT(*) FROM runs")
        runs_count = cur.fetchone()[0]

        cur.execute("SELECT COUNT(*) FROM runs WHERE status = 'success'")
        success_count = cur.fetchone()[0]

        cur.execute("SELECT COUNT(*) FROM results")
        results_count = cur.fetchone()[0]

        # Tajribalar bo'yicha
        cur.execute(
            """
            SELECT experiment, COUNT(*) as count
            FROM runs
            GROUP BY experiment
            ORDER BY count DESC, experiment
            """
        )
        experiment_stats = cur.fetchall()

        # Oxirgi ishga tushirishlar
        cur.execute(
            """
            SELECT id, experiment, status, row_count, started_at
            FROM runs
            ORDER BY id DESC
            LIMIT ?
            """,
            (limit,),
        )
        recent_runs = cur.fetchall()

        return {
            "runs_count": runs_count,
            "success_count": success_count,
            "success_rate": round((success_count / runs_count * 100) if runs_count > 0 else 0, 1),
            "results_count": results_count,
            "experiment_stats": experiment_stats,
            "recent_runs": recent_runs,
        }
