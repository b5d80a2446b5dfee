"""Single-file relational store for roster, gallery, sessions, and history.

sqlite3 in WAL mode, one connection guarded by a re-entrant lock so the
HTTP handlers can share it across threads. Employee deletion keeps a
tombstone row (``deleted = 1``) so session foreign keys stay valid while
the employee disappears from every directory surface; gallery embeddings
are purged eagerly. Archive rows are append-only with a gap-free
sequence assigned at insert time.
"""

from __future__ import annotations

import json
import sqlite3
import threading
from contextlib import contextmanager
from typing import Iterator

from .embedding import Embedding
from .gallery import Gallery, GalleryEntry
from .tracking import (
    AlertEvent,
    ArchiveRecord,
    CheckOutcome,
    CheckSchedule,
    EmployeeSnapshot,
    PresenceCheck,
    SessionStatus,
    WorkSession,
)

_SCHEMA = """
CREATE TABLE IF NOT EXISTS employees (
    employee_id TEXT PRIMARY KEY,
    name        TEXT NOT NULL,
    contact     TEXT NOT NULL,
    role        TEXT NOT NULL CHECK (role IN ('admin', 'employee')),
    active      INTEGER NOT NULL DEFAULT 1,
    deleted     INTEGER NOT NULL DEFAULT 0,
    image_refs  TEXT NOT NULL DEFAULT '[]'
);
CREATE TABLE IF NOT EXISTS gallery_embeddings (
    id          INTEGER PRIMARY KEY,
    employee_id TEXT NOT NULL REFERENCES employees(employee_id) ON DELETE CASCADE,
    position    INTEGER NOT NULL,
    vector      BLOB NOT NULL,
    enrolled_at REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS sessions (
    session_id  TEXT PRIMARY KEY,
    employee_id TEXT NOT NULL REFERENCES employees(employee_id),
    started_at  REAL NOT NULL,
    ended_at    REAL,
    status      TEXT NOT NULL,
    miss_run    INTEGER NOT NULL DEFAULT 0,
    checks_done INTEGER NOT NULL DEFAULT 0,
    schedule    TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS checks (
    id            INTEGER PRIMARY KEY,
    session_id    TEXT NOT NULL REFERENCES sessions(session_id),
    at            REAL NOT NULL,
    outcome       TEXT NOT NULL,
    best_distance REAL,
    frame_ref     TEXT
);
CREATE TABLE IF NOT EXISTS archive (
    seq              INTEGER PRIMARY KEY,
    session_id       TEXT NOT NULL,
    employee_id      TEXT NOT NULL,
    at               REAL NOT NULL,
    outcome          TEXT NOT NULL,
    best_distance    REAL,
    frame_ref        TEXT,
    employee_name    TEXT NOT NULL,
    employee_contact TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS alerts (
    alert_id        TEXT PRIMARY KEY,
    session_id      TEXT NOT NULL,
    employee_id     TEXT NOT NULL,
    triggered_at    REAL NOT NULL,
    miss_run_length INTEGER NOT NULL,
    recipients      TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS tokens (
    token        TEXT PRIMARY KEY,
    principal_id TEXT NOT NULL,
    role         TEXT NOT NULL CHECK (role IN ('admin', 'employee', 'auditor'))
);
"""


class Store:
    def __init__(self, path: str = ":memory:") -> None:
        self.path = path
        self._lock = threading.RLock()
        self._txn_depth = 0
        # autocommit connection; transaction() issues explicit BEGIN/COMMIT
        self._conn = sqlite3.connect(path, check_same_thread=False, isolation_level=None)
        self._conn.row_factory = sqlite3.Row
        self._conn.execute("PRAGMA foreign_keys = ON")
        if path != ":memory:":
            self._conn.execute("PRAGMA journal_mode = WAL")
        self._conn.executescript(_SCHEMA)

    def close(self) -> None:
        self._conn.close()

    @contextmanager
    def transaction(self) -> Iterator[sqlite3.Connection]:
        """All-or-nothing write scope; nested scopes join the outermost one."""
        with self._lock:
            outermost = self._txn_depth == 0
            if outermost:
                self._conn.execute("BEGIN")
            self._txn_depth += 1
            try:
                yield self._conn
            except BaseException:
                self._txn_depth -= 1
                if outermost:
                    self._conn.execute("ROLLBACK")
                raise
            else:
                self._txn_depth -= 1
                if outermost:
                    self._conn.execute("COMMIT")

    def query(self, sql: str, params: tuple = ()) -> list[sqlite3.Row]:
        with self._lock:
            return self._conn.execute(sql, params).fetchall()

    # -- employees ---------------------------------------------------

    def insert_employee(
        self, employee_id: str, name: str, contact: str, role: str, active: bool,
        image_refs: list[str],
    ) -> None:
        self._conn.execute(
            "INSERT INTO employees (employee_id, name, contact, role, active, image_refs)"
            " VALUES (?, ?, ?, ?, ?, ?)",
            (employee_id, name, contact, role, int(active), json.dumps(image_refs)),
        )

    def update_employee_fields(self, employee_id: str, fields: dict) -> None:
        allowed = {"name", "contact", "role", "active", "image_refs"}
        items = [(k, v) for k, v in fields.items() if k in allowed]
        if not items:
            return
        assignments = ", ".join(f"{k} = ?" for k, _ in items)
        values = [
            json.dumps(v) if k == "image_refs" else (int(v) if k == "active" else v)
            for k, v in items
        ]
        self._conn.execute(
            f"UPDATE employees SET {assignments} WHERE employee_id = ?",
            (*values, employee_id),
        )

    def tombstone_employee(self, employee_id: str) -> None:
        self._conn.execute(
            "UPDATE employees SET deleted = 1, active = 0 WHERE employee_id = ?",
            (employee_id,),
        )

    def get_employee(self, employee_id: str) -> sqlite3.Row | None:
        rows = self.query(
            "SELECT * FROM employees WHERE employee_id = ? AND deleted = 0", (employee_id,)
        )
        return rows[0] if rows else None

    def list_employees(self) -> list[sqlite3.Row]:
        return self.query("SELECT * FROM employees WHERE deleted = 0 ORDER BY employee_id")

    # -- gallery -----------------------------------------------------

    def replace_gallery_rows(
        self, employee_id: str, embeddings: list[Embedding], enrolled_at: float
    ) -> None:
        self._conn.execute(
            "DELETE FROM gallery_embeddings WHERE employee_id = ?", (employee_id,)
        )
        self._conn.executemany(
            "INSERT INTO gallery_embeddings (employee_id, position, vector, enrolled_at)"
            " VALUES (?, ?, ?, ?)",
            [
                (employee_id, i, emb.to_bytes(), enrolled_at)
                for i, emb in enumerate(embeddings)
            ],
        )

    def delete_gallery_rows(self, employee_id: str) -> None:
        self._conn.execute(
            "DELETE FROM gallery_embeddings WHERE employee_id = ?", (employee_id,)
        )

    def load_gallery(self) -> Gallery:
        rows = self.query(
            "SELECT employee_id, position, vector, enrolled_at FROM gallery_embeddings"
            " ORDER BY employee_id, position"
        )
        grouped: dict[str, tuple[list[Embedding], float]] = {}
        for row in rows:
            vecs, _ = grouped.setdefault(row["employee_id"], ([], row["enrolled_at"]))
            vecs.append(Embedding.from_bytes(row["vector"]))
        return Gallery(
            GalleryEntry(pid, tuple(vecs), at) for pid, (vecs, at) in grouped.items()
        )

    # -- sessions and checks ------------------------------------------

    def insert_session(self, session: WorkSession, schedule: CheckSchedule) -> None:
        self._conn.execute(
            "INSERT INTO sessions (session_id, employee_id, started_at, ended_at, status,"
            " miss_run, checks_done, schedule) VALUES (?, ?, ?, ?, ?, ?, ?, ?)",
            (
                session.session_id,
                session.employee_id,
                session.started_at,
                session.ended_at,
                session.status.value,
                session.miss_run,
                session.checks_done,
                json.dumps(schedule.to_dict()),
            ),
        )

    def update_session(self, session: WorkSession) -> None:
        self._conn.execute(
            "UPDATE sessions SET ended_at = ?, status = ?, miss_run = ?, checks_done = ?"
            " WHERE session_id = ?",
            (
                session.ended_at,
                session.status.value,
                session.miss_run,
                session.checks_done,
                session.session_id,
            ),
        )

    def insert_check(self, check: PresenceCheck) -> None:
        self._conn.execute(
            "INSERT INTO checks (session_id, at, outcome, best_distance, frame_ref)"
            " VALUES (?, ?, ?, ?, ?)",
            (
                check.session_id,
                check.at,
                check.outcome.value,
                check.best_distance,
                check.frame_ref,
            ),
        )

    def insert_alert(self, alert: AlertEvent) -> None:
        self._conn.execute(
            "INSERT INTO alerts (alert_id, session_id, employee_id, triggered_at,"
            " miss_run_length, recipients) VALUES (?, ?, ?, ?, ?, ?)",
            (
                alert.alert_id,
                alert.session_id,
                alert.employee_id,
                alert.triggered_at,
                alert.miss_run_length,
                json.dumps(list(alert.recipients)),
            ),
        )

    def list_alerts(self, employee_id: str | None = None) -> list[sqlite3.Row]:
        if employee_id is None:
            return self.query("SELECT * FROM alerts ORDER BY triggered_at")
        return self.query(
            "SELECT * FROM alerts WHERE employee_id = ? ORDER BY triggered_at",
            (employee_id,),
        )

    def load_sessions(self) -> list[tuple[WorkSession, CheckSchedule]]:
        out = []
        for row in self.query("SELECT * FROM sessions ORDER BY started_at"):
            session = WorkSession(
                session_id=row["session_id"],
                employee_id=row["employee_id"],
                started_at=row["started_at"],
                ended_at=row["ended_at"],
                status=SessionStatus(row["status"]),
                miss_run=row["miss_run"],
                checks_done=row["checks_done"],
            )
            sched = json.loads(row["schedule"])
            schedule = CheckSchedule(
                session_id=sched["session_id"],
                check_times=tuple(sched["check_times"]),
                segment_count=sched["segment_count"],
                rng_seed=sched["rng_seed"],
            )
            out.append((session, schedule))
        return out

    # -- tokens --------------------------------------------------------

    def put_token(self, token: str, principal_id: str, role: str) -> None:
        with self.transaction():
            self._conn.execute(
                "INSERT OR REPLACE INTO tokens (token, principal_id, role) VALUES (?, ?, ?)",
                (token, principal_id, role),
            )

    def lookup_token(self, token: str) -> sqlite3.Row | None:
        rows = self.query("SELECT * FROM tokens WHERE token = ?", (token,))
        return rows[0] if rows else None


class SqliteArchive:
    """ArchiveSink backed by the store's append-only archive table.

    Appends participate in any transaction already open on the store's
    connection, so a frame submission commits its check, archive row, and
    alert atomically.
    """

    def __init__(self, store: Store) -> None:
        self.store = store

    def append(self, check: PresenceCheck, employee: EmployeeSnapshot) -> ArchiveRecord:
        with self.store._lock:
            cur = self.store._conn.execute(
                "INSERT INTO archive (seq, session_id, employee_id, at, outcome,"
                " best_distance, frame_ref, employee_name, employee_contact)"
                " VALUES ((SELECT COALESCE(MAX(seq), 0) + 1 FROM archive),"
                " ?, ?, ?, ?, ?, ?, ?, ?)",
                (
                    check.session_id,
                    employee.employee_id,
                    check.at,
                    check.outcome.value,
                    check.best_distance,
                    check.frame_ref,
                    employee.name,
                    employee.contact,
                ),
            )
            seq = self.store.query(
                "SELECT seq FROM archive WHERE rowid = ?", (cur.lastrowid,)
            )[0]["seq"]
        return ArchiveRecord(seq=seq, check=check, employee=employee)

    def records(self) -> list[ArchiveRecord]:
        out = []
        for row in self.store.query("SELECT * FROM archive ORDER BY seq"):
            check = PresenceCheck(
                session_id=row["session_id"],
                at=row["at"],
                outcome=CheckOutcome(row["outcome"]),
                best_distance=row["best_distance"],
                frame_ref=row["frame_ref"],
            )
            employee = EmployeeSnapshot(
                employee_id=row["employee_id"],
                name=row["employee_name"],
                contact=row["employee_contact"],
            )
            out.append(ArchiveRecord(seq=row["seq"], check=check, employee=employee))
        return out
