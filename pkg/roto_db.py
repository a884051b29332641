"""Rotosensor — cache SQLite des balayages (reprise, ré-export)."""

import json
import os
import sqlite3
import sys
from datetime import datetime, timezone
from pathlib import Path

from roto_search import SearchConfig, SweepRecord
from roto_state import SpinState, profile

DEFAULT_DB_PATH = Path(__file__).parent / "rotosensor.db"

# Clé de reproductibilité : deux balayages qui la partagent produisent les mêmes points
SWEEPS_TABLE = """
    CREATE TABLE IF NOT EXISTS {name} (
        id          INTEGER PRIMARY KEY AUTOINCREMENT,
        two_j       INTEGER NOT NULL,
        mode        TEXT NOT NULL,
        seed        INTEGER NOT NULL,
        restarts    INTEGER NOT NULL,
        max_iter    INTEGER NOT NULL,
        warm_start  INTEGER NOT NULL DEFAULT 1,
        created_at  TEXT,
        UNIQUE (two_j, mode, seed, restarts, max_iter, warm_start)
    );
"""


def db_path(path: str | Path | None = None) -> Path:
    """Chemin explicite > ROTOSENSOR_DB > rotosensor.db à côté du code."""
    if path is not None:
        return Path(path)
    env = os.getenv("ROTOSENSOR_DB")
    return Path(env) if env else DEFAULT_DB_PATH


def get_conn(path: str | Path | None = None) -> sqlite3.Connection:
    conn = sqlite3.connect(db_path(path))
    conn.row_factory = sqlite3.Row
    conn.execute("PRAGMA journal_mode=WAL")
    conn.execute("PRAGMA foreign_keys=ON")
    return conn


def init_db(path: str | Path | None = None) -> None:
    with get_conn(path) as conn:
        conn.executescript(SWEEPS_TABLE.format(name="sweeps") + """
            CREATE TABLE IF NOT EXISTS records (
                sweep_id              INTEGER NOT NULL,
                eta                   REAL NOT NULL,
                eta_index             INTEGER,
                best_value            REAL,
                measures              TEXT,
                state                 TEXT,
                restarts_hitting_best INTEGER,
                converged             INTEGER DEFAULT 1,
                n_evaluations         INTEGER DEFAULT 0,
                computed_at           TEXT,
                PRIMARY KEY (sweep_id, eta),
                FOREIGN KEY (sweep_id) REFERENCES sweeps(id)
            );

            CREATE INDEX IF NOT EXISTS idx_records_sweep ON records(sweep_id, eta);

            CREATE TABLE IF NOT EXISTS manifest (
                key         TEXT PRIMARY KEY,
                value       TEXT
            );
        """)
        # Migration sweeps : warm_start entre dans la contrainte UNIQUE, table reconstruite
        try:
            conn.execute("SELECT warm_start FROM sweeps LIMIT 1")
        except sqlite3.OperationalError:
            conn.executescript("PRAGMA foreign_keys=OFF; BEGIN;" + SWEEPS_TABLE.format(name="sweeps_new") + """
                INSERT INTO sweeps_new (id, two_j, mode, seed, restarts, max_iter, warm_start, created_at)
                    SELECT id, two_j, mode, seed, restarts, max_iter, 1, created_at FROM sweeps;
                DROP TABLE sweeps;
                ALTER TABLE sweeps_new RENAME TO sweeps;
                COMMIT;
                PRAGMA foreign_keys=ON;
            """)
            print("[DB] Migration sweeps : colonne warm_start ajoutée à la clé", file=sys.stderr)
        # Migration records : ajouter n_evaluations si absent
        try:
            conn.execute("SELECT n_evaluations FROM records LIMIT 1")
        except sqlite3.OperationalError:
            conn.execute("ALTER TABLE records ADD COLUMN n_evaluations INTEGER DEFAULT 0")
            print("[DB] Migration records : colonne n_evaluations ajoutée", file=sys.stderr)
        # Migration records : ajouter eta_index si absent (anciens points jamais repris)
        try:
            conn.execute("SELECT eta_index FROM records LIMIT 1")
        except sqlite3.OperationalError:
            conn.execute("ALTER TABLE records ADD COLUMN eta_index INTEGER")
            print("[DB] Migration records : colonne eta_index ajoutée", file=sys.stderr)
    print(f"[DB] Tables initialisées ({db_path(path)})", file=sys.stderr)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def get_or_create_sweep(
    two_j: int, mode: str, cfg: SearchConfig, path: str | Path | None = None
) -> int:
    """Identifiant du balayage (two_j, mode, seed, restarts, max_iter, warm_start), créé si besoin."""
    key = (two_j, mode, cfg.seed, cfg.restarts, cfg.max_iter, 1 if cfg.warm_start else 0)
    with get_conn(path) as conn:
        conn.execute("""
            INSERT INTO sweeps (two_j, mode, seed, restarts, max_iter, warm_start, created_at)
            VALUES (?, ?, ?, ?, ?, ?, ?)
            ON CONFLICT(two_j, mode, seed, restarts, max_iter, warm_start) DO NOTHING
        """, key + (_now(),))
        row = conn.execute(
            "SELECT id FROM sweeps WHERE two_j=? AND mode=? AND seed=? AND restarts=? "
            "AND max_iter=? AND warm_start=?",
            key,
        ).fetchone()
    return row["id"]


def save_record(
    sweep_id: int, eta_index: int, record: SweepRecord, path: str | Path | None = None
) -> None:
    with get_conn(path) as conn:
        conn.execute("""
            INSERT INTO records
                (sweep_id, eta, eta_index, best_value, measures, state,
                 restarts_hitting_best, converged, n_evaluations, computed_at)
            VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
            ON CONFLICT(sweep_id, eta) DO UPDATE SET
                eta_index=excluded.eta_index,
                best_value=excluded.best_value, measures=excluded.measures,
                state=excluded.state, restarts_hitting_best=excluded.restarts_hitting_best,
                converged=excluded.converged, n_evaluations=excluded.n_evaluations,
                computed_at=excluded.computed_at
        """, (
            sweep_id,
            record.eta,
            eta_index,
            record.best_value,
            json.dumps(list(record.profile.measures)),
            record.best_state.to_json(),
            record.restarts_hitting_best,
            1 if record.converged else 0,
            record.n_evaluations,
            _now(),
        ))


def _row_to_record(row: sqlite3.Row, mode: str) -> SweepRecord:
    state = SpinState.from_json(row["state"])
    return SweepRecord(
        eta=row["eta"],
        best_value=row["best_value"],
        best_state=state,
        profile=profile(state),
        restarts_hitting_best=row["restarts_hitting_best"],
        converged=bool(row["converged"]),
        n_evaluations=row["n_evaluations"] or 0,
        mode=mode,
    )


def load_records(sweep_id: int, path: str | Path | None = None) -> list[SweepRecord]:
    """Tous les points stockés du balayage, par η croissant."""
    with get_conn(path) as conn:
        mode = conn.execute("SELECT mode FROM sweeps WHERE id=?", (sweep_id,)).fetchone()
        rows = conn.execute(
            "SELECT * FROM records WHERE sweep_id=? ORDER BY eta", (sweep_id,)
        ).fetchall()
    if mode is None:
        return []
    return [_row_to_record(r, mode["mode"]) for r in rows]


def stored_for_grid(
    sweep_id: int, etas: list[float], path: str | Path | None = None
) -> dict[int, SweepRecord]:
    """{indice dans la grille: record} pour les points stockés au même indice et au même η.

    Les graines des départs dépendent de l'indice du point : un η stocké à un
    autre indice (grille décalée) est recalculé. Égalité exacte sur η.
    """
    with get_conn(path) as conn:
        mode = conn.execute("SELECT mode FROM sweeps WHERE id=?", (sweep_id,)).fetchone()
        rows = conn.execute(
            "SELECT * FROM records WHERE sweep_id=? AND eta_index IS NOT NULL", (sweep_id,)
        ).fetchall()
    if mode is None:
        return {}
    by_key = {(row["eta_index"], row["eta"]): row for row in rows}
    stored = {
        i: _row_to_record(by_key[(i, e)], mode["mode"])
        for i, e in enumerate(etas)
        if (i, e) in by_key
    }
    if stored:
        print(f"[DB] Reprise : {len(stored)}/{len(etas)} points déjà calculés (sweep {sweep_id})", file=sys.stderr)
    return stored


def set_manifest(key: str, value: str, path: str | Path | None = None) -> None:
    with get_conn(path) as conn:
        conn.execute("""
            INSERT INTO manifest (key, value) VALUES (?, ?)
            ON CONFLICT(key) DO UPDATE SET value=excluded.value
        """, (key, value))


def get_manifest(key: str, path: str | Path | None = None) -> str | None:
    with get_conn(path) as conn:
        row = conn.execute("SELECT value FROM manifest WHERE key=?", (key,)).fetchone()
        return row["value"] if row else None
