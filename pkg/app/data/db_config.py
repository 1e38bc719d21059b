"""
db_config.py — SQLite run audit

Purpose:
    - Records every executed command (config, exit code, runtime, report digest)
      so reproducibility of reports can be checked after the fact.
    - Keeps a small app_logs table for diagnostics that should outlive a run.

Location:
    app/data/db_config.py

Usage:
    from app.data.db_config import init_db, record_run
    init_db()
    record_run("spectrum", config_json, 0, 12.5, digest)
"""

import os
import sqlite3
from datetime import datetime
from pathlib import Path
from typing import Optional

# -------------------------------------
# Database file location and structure
# -------------------------------------
DEFAULT_DB_PATH = Path(__file__).resolve().parent / "app.db"
DB_PATH = Path(os.getenv("STEKLOV_DB_PATH", str(DEFAULT_DB_PATH)))


def _utc_now() -> str:
    return datetime.utcnow().isoformat(timespec="seconds") + "Z"


def get_connection() -> sqlite3.Connection:
    """
    Returns a new SQLite connection.
    You should always close the connection when done.
    """
    DB_PATH.parent.mkdir(parents=True, exist_ok=True)
    conn = sqlite3.connect(DB_PATH)
    conn.row_factory = sqlite3.Row
    return conn


def init_db() -> None:
    """
    Creates the audit tables if they don't exist.
    Called by the entry points before the first run is recorded.
    """
    DB_PATH.parent.mkdir(parents=True, exist_ok=True)
    with sqlite3.connect(DB_PATH) as conn:
        conn.execute(
            """
            CREATE TABLE IF NOT EXISTS runs (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                created_at TEXT NOT NULL,
                command TEXT NOT NULL,
                config_json TEXT NOT NULL,
                exit_code INTEGER NOT NULL,
                elapsed_ms REAL,
                report_digest TEXT
            )
            """
        )
        conn.execute(
            """
            CREATE TABLE IF NOT EXISTS app_logs (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                log_time TEXT NOT NULL,
                level TEXT NOT NULL,
                message TEXT
            )
            """
        )
        conn.commit()


def record_run(
    command: str,
    config_json: str,
    exit_code: int,
    elapsed_ms: float,
    report_digest: Optional[str],
) -> None:
    """
    Best-effort audit row for one executed command. Never raises outwardly.
    """
    try:
        with get_connection() as conn:
            conn.execute(
                """
                INSERT INTO runs
                    (created_at, command, config_json, exit_code, elapsed_ms, report_digest)
                VALUES
                    (?, ?, ?, ?, ?, ?)
                """,
                (_utc_now(), command, config_json, exit_code, elapsed_ms, report_digest),
            )
            conn.commit()
    except Exception:
        # the run itself already succeeded or failed on its own terms
        pass


def log_message(level: str, message: str) -> None:
    """
    Simple logging helper that writes a log entry into the database.
    """
    try:
        with sqlite3.connect(DB_PATH) as conn:
            conn.execute(
                """
                INSERT INTO app_logs (log_time, level, message)
                VALUES (?, ?, ?)
                """,
                (_utc_now(), level, message),
            )
            conn.commit()
    except Exception:
        pass


if __name__ == "__main__":
    init_db()
    print(f"Database initialized at: {DB_PATH}")
