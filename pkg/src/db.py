import hashlib
import json
import sqlite3
from pathlib import Path

from config import DEFAULT_LEDGER_PATH, FLOAT_FORMAT

# Run ledger: one row per CLI invocation, plus its reported scalar values.


def _get_connection(path=None):
    return sqlite3.connect(Path(path or DEFAULT_LEDGER_PATH))


def init_db(path=None):
    conn = _get_connection(path)
    cur = conn.cursor()

    cur.execute("""
    CREATE TABLE IF NOT EXISTS runs (
        id INTEGER PRIMARY KEY AUTOINCREMENT,
        command TEXT NOT NULL,         -- 'radius','centrality','sweep',...
        input_digest TEXT,             -- sha256 over the input file bytes
        config_json TEXT,
        status TEXT NOT NULL,          -- 'ok','validation-error','numerical-error'
        created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
    )
    """)

    cur.execute("""
    CREATE TABLE IF NOT EXISTS run_values (
        run_id INTEGER NOT NULL,
        key TEXT NOT NULL,
        value TEXT,
        FOREIGN KEY (run_id) REFERENCES runs(id)
    )
    """)

    conn.commit()
    conn.close()


def digest_inputs(paths) -> str:
    h = hashlib.sha256()
    for path in paths:
        with open(path, "rb") as handle:
            h.update(handle.read())
    return h.hexdigest()


def _format_value(value) -> str:
    if isinstance(value, float):
        return FLOAT_FORMAT % value
    return str(value)


def record_run(command: str, input_digest: str, config: dict, values: dict, status: str = "ok",
               path=None) -> int:
    init_db(path)
    conn = _get_connection(path)
    cur = conn.cursor()
    try:
        cur.execute(
            """
            INSERT INTO runs (command, input_digest, config_json, status)
            VALUES (?, ?, ?, ?)
            """,
            (command, input_digest, json.dumps(config, sort_keys=True, default=str), status),
        )
        run_id = cur.lastrowid
        cur.executemany(
            "INSERT INTO run_values (run_id, key, value) VALUES (?, ?, ?)",
            [(run_id, key, _format_value(value)) for key, value in values.items()],
        )
        conn.commit()
    except sqlite3.Error:
        conn.rollback()
        raise
    finally:
        conn.close()
    return run_id


def list_runs(path=None, command=None):
    init_db(path)
    conn = _get_connection(path)
    cur = conn.cursor()
    if command:
        cur.execute(
            """
            SELECT id, command, input_digest, config_json, status, created_at
            FROM runs WHERE command = ? ORDER BY id ASC
            """,
            (command,),
        )
    else:
        cur.execute(
            """
            SELECT id, command, input_digest, config_json, status, created_at
            FROM runs ORDER BY id ASC
            """
        )
    rows = cur.fetchall()
    conn.close()
    runs = []
    for r in rows:
        runs.append(
            {
                "id": r[0],
                "command": r[1],
                "input_digest": r[2],
                "config": json.loads(r[3]) if r[3] else {},
                "status": r[4],
                "created_at": r[5],
            }
        )
    return runs


def get_run_values(run_id: int, path=None):
    init_db(path)
    conn = _get_connection(path)
    cur = conn.cursor()
    cur.execute("SELECT key, value FROM run_values WHERE run_id = ? ORDER BY rowid ASC", (run_id,))
    rows = cur.fetchall()
    conn.close()
    return {key: value for key, value in rows}
