"""SQLite run ledger for oscint.

Every CLI invocation is recorded in ``runs`` (command, parameters, result,
status, runtime) and every growth-sweep row in ``sweep_records``, using SQLite
in WAL mode. The sweep CSV/JSON files stay the primary artifact; the ledger is
the queryable history behind ``oscint history``.

Environment variables:
    OSCINT_DB_PATH - database location (default: data/oscint.db)
"""

from __future__ import annotations

import json
import os
import sqlite3
import time
from pathlib import Path
from typing import Any, Iterable

from src.config import get_settings
from src.experiments import SweepRecord

_DEFAULT_DB_PATH = Path(__file__).resolve().parent.parent / "data" / "oscint.db"


def _configured_db_path() -> str:
    return get_settings().db_path or str(_DEFAULT_DB_PATH)


# SQL schema
_SCHEMA = """
CREATE TABLE IF NOT EXISTS runs (
    run_id INTEGER PRIMARY KEY AUTOINCREMENT,
    command TEXT NOT NULL,
    params TEXT NOT NULL DEFAULT '{}',   -- JSON blob
    result TEXT,                         -- JSON blob
    status TEXT NOT NULL DEFAULT 'ok',   -- 'ok', 'error', 'usage'
    exit_code INTEGER NOT NULL DEFAULT 0,
    runtime_ms REAL NOT NULL DEFAULT 0.0,
    created_at REAL NOT NULL
);

CREATE TABLE IF NOT EXISTS sweep_records (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    run_id INTEGER,
    n INTEGER NOT NULL,
    d INTEGER NOT NULL,
    i_pn REAL,
    i_fn REAL,
    d_n REAL,
    ratio_logd REAL,
    chain_holds INTEGER NOT NULL DEFAULT 0,
    status TEXT NOT NULL,
    tol REAL NOT NULL,
    runtime_ms REAL NOT NULL DEFAULT 0.0,
    record TEXT NOT NULL,                -- JSON blob of the full record
    created_at REAL NOT NULL
);
"""


def _encode(value: Any) -> str:
    # NaN is not valid JSON; store it as null
    def clean(v: Any) -> Any:
        if isinstance(v, float) and v != v:
            return None
        if isinstance(v, dict):
            return {k: clean(x) for k, x in v.items()}
        if isinstance(v, (list, tuple)):
            return [clean(x) for x in v]
        return v

    return json.dumps(clean(value), default=str)


class SQLiteStorage:
    """Ledger of CLI runs and sweep records."""

    def __init__(self, db_path: str | Path | None = None) -> None:
        self._db_path = str(db_path or _configured_db_path())
        os.makedirs(os.path.dirname(os.path.abspath(self._db_path)), exist_ok=True)
        self._conn: sqlite3.Connection | None = None
        self._init_db()

    @property
    def db_path(self) -> str:
        return self._db_path

    def _get_conn(self) -> sqlite3.Connection:
        """Get a persistent connection with WAL mode."""
        if self._conn is None:
            self._conn = sqlite3.connect(self._db_path, check_same_thread=False)
            self._conn.row_factory = sqlite3.Row
            self._conn.execute("PRAGMA journal_mode=WAL")
        return self._conn

    def _init_db(self) -> None:
        """Create tables if they don't exist."""
        conn = self._get_conn()
        conn.executescript(_SCHEMA)
        conn.commit()

    # ------------------------------------------------------------------
    # Runs
    # ------------------------------------------------------------------

    def save_run(
        self,
        command: str,
        params: dict[str, Any] | None = None,
        result: Any = None,
        status: str = "ok",
        exit_code: int = 0,
        runtime_ms: float = 0.0,
        created_at: float | None = None,
    ) -> int:
        """Insert a run and return its id."""
        conn = self._get_conn()
        cur = conn.execute(
            """INSERT INTO runs
               (command, params, result, status, exit_code, runtime_ms, created_at)
               VALUES (?, ?, ?, ?, ?, ?, ?)""",
            (
                command,
                _encode(params or {}),
                _encode(result) if result is not None else None,
                status,
                exit_code,
                runtime_ms,
                created_at or time.time(),
            ),
        )
        conn.commit()
        return int(cur.lastrowid)

    def get_run(self, run_id: int) -> dict[str, Any] | None:
        """Retrieve a run by id. Returns dict or None."""
        conn = self._get_conn()
        row = conn.execute("SELECT * FROM runs WHERE run_id = ?", (run_id,)).fetchone()
        if row is None:
            return None
        return self._row_to_run(row)

    def list_runs(self, command: str | None = None, limit: int | None = None) -> list[dict[str, Any]]:
        """Most recent runs first, optionally filtered by command."""
        conn = self._get_conn()
        query = "SELECT * FROM runs"
        args: list[Any] = []
        if command is not None:
            query += " WHERE command = ?"
            args.append(command)
        query += " ORDER BY run_id DESC"
        if limit is not None:
            query += " LIMIT ?"
            args.append(limit)
        return [self._row_to_run(r) for r in conn.execute(query, args).fetchall()]

    def count_runs(self, status: str | None = None) -> int:
        """Count runs, optionally filtered by status."""
        conn = self._get_conn()
        if status is not None:
            row = conn.execute("SELECT COUNT(*) FROM runs WHERE status = ?", (status,)).fetchone()
        else:
            row = conn.execute("SELECT COUNT(*) FROM runs").fetchone()
        return row[0]

    def clear_runs(self) -> None:
        conn = self._get_conn()
        conn.execute("DELETE FROM runs")
        conn.commit()

    @staticmethod
    def _row_to_run(row: sqlite3.Row) -> dict[str, Any]:
        result_raw = row["result"]
        return {
            "run_id": row["run_id"],
            "command": row["command"],
            "params": json.loads(row["params"]),
            "result": json.loads(result_raw) if result_raw else None,
            "status": row["status"],
            "exit_code": row["exit_code"],
            "runtime_ms": row["runtime_ms"],
            "created_at": row["created_at"],
        }

    # ------------------------------------------------------------------
    # Sweep records
    # ------------------------------------------------------------------

    def save_sweep_records(self, records: Iterable[SweepRecord], run_id: int | None = None) -> int:
        """Insert sweep rows; returns how many were written."""
        conn = self._get_conn()
        now = time.time()
        rows = [
            (
                run_id, r.n, r.d, r.I_Pn, r.I_fn, r.D_n, r.ratio_logd,
                int(r.chain_holds), r.status, r.tol, r.runtime_ms, _encode(r.to_dict()), now,
            )
            for r in records
        ]
        conn.executemany(
            """INSERT INTO sweep_records
               (run_id, n, d, i_pn, i_fn, d_n, ratio_logd, chain_holds, status, tol,
                runtime_ms, record, created_at)
               VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)""",
            rows,
        )
        conn.commit()
        return len(rows)

    def list_sweep_records(self, n: int | None = None, run_id: int | None = None) -> list[dict[str, Any]]:
        """Sweep rows ordered by n, optionally filtered."""
        conn = self._get_conn()
        clauses, args = [], []
        if n is not None:
            clauses.append("n = ?")
            args.append(n)
        if run_id is not None:
            clauses.append("run_id = ?")
            args.append(run_id)
        query = "SELECT * FROM sweep_records"
        if clauses:
            query += " WHERE " + " AND ".join(clauses)
        query += " ORDER BY n, id"
        return [self._row_to_sweep(r) for r in conn.execute(query, args).fetchall()]

    def clear_sweep_records(self) -> None:
        conn = self._get_conn()
        conn.execute("DELETE FROM sweep_records")
        conn.commit()

    @staticmethod
    def _row_to_sweep(row: sqlite3.Row) -> dict[str, Any]:
        return {
            "id": row["id"],
            "run_id": row["run_id"],
            "n": row["n"],
            "d": row["d"],
            "I_Pn": row["i_pn"],
            "I_fn": row["i_fn"],
            "D_n": row["d_n"],
            "ratio_logd": row["ratio_logd"],
            "chain_holds": bool(row["chain_holds"]),
            "status": row["status"],
            "tol": row["tol"],
            "runtime_ms": row["runtime_ms"],
            "record": json.loads(row["record"]),
            "created_at": row["created_at"],
        }

    # ------------------------------------------------------------------
    # Utility
    # ------------------------------------------------------------------

    def clear_all(self) -> None:
        """Clear all tables (for testing)."""
        self.clear_runs()
        self.clear_sweep_records()

    def close(self) -> None:
        """Close the persistent connection."""
        if self._conn is not None:
            self._conn.close()
            self._conn = None


# Module-level singleton
_storage: SQLiteStorage | None = None


def get_storage(db_path: str | Path | None = None) -> SQLiteStorage:
    """Get or create the global storage instance."""
    global _storage
    if _storage is None:
        _storage = SQLiteStorage(db_path)
    return _storage


def reset_storage(db_path: str | Path | None = None) -> SQLiteStorage:
    """Reset the global storage instance (for testing)."""
    global _storage
    if _storage is not None:
        _storage.close()
    _storage = SQLiteStorage(db_path)
    return _storage
