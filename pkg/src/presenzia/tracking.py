"""Work sessions, randomized presence checks, consecutive-miss alerts, archive.

The state machine is small: a present check resets the session's miss
run, any other outcome extends it, and an alert fires exactly when the
run first reaches the configured length. Every check is copied into an
append-only archive together with a snapshot of the employee details, so
history survives roster changes.
"""

from __future__ import annotations

import enum
import json
import random
import threading
import uuid
from dataclasses import dataclass, replace
from typing import Callable, Protocol

from .errors import (
    InvalidSpan,
    NotFound,
    PermissionDenied,
    SessionExists,
    SessionNotActive,
)

ALERT_RECIPIENTS = ("admin", "employee")


class SessionStatus(enum.Enum):
    ACTIVE = "active"
    ENDED = "ended"
    ENDED_BY_ADMIN = "ended_by_admin"


class CheckOutcome(enum.Enum):
    PRESENT = "present"
    NO_FACE = "no_face"
    UNKNOWN_FACE = "unknown_face"
    WRONG_PERSON = "wrong_person"


@dataclass
class WorkSession:
    session_id: str
    employee_id: str
    started_at: float
    ended_at: float | None = None
    status: SessionStatus = SessionStatus.ACTIVE
    miss_run: int = 0
    checks_done: int = 0

    @property
    def active(self) -> bool:
        return self.status is SessionStatus.ACTIVE

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "employee_id": self.employee_id,
            "started_at": self.started_at,
            "ended_at": self.ended_at,
            "status": self.status.value,
            "miss_run": self.miss_run,
            "checks_done": self.checks_done,
        }


@dataclass(frozen=True)
class CheckSchedule:
    session_id: str
    check_times: tuple[float, ...]
    segment_count: int
    rng_seed: int

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "check_times": list(self.check_times),
            "segment_count": self.segment_count,
            "rng_seed": self.rng_seed,
        }


@dataclass(frozen=True)
class PresenceCheck:
    session_id: str
    at: float
    outcome: CheckOutcome
    best_distance: float | None = None
    frame_ref: str | None = None


@dataclass(frozen=True)
class AlertEvent:
    alert_id: str
    session_id: str
    employee_id: str
    triggered_at: float
    miss_run_length: int
    recipients: tuple[str, ...] = ALERT_RECIPIENTS

    def to_dict(self) -> dict:
        return {
            "alert_id": self.alert_id,
            "session_id": self.session_id,
            "employee_id": self.employee_id,
            "triggered_at": self.triggered_at,
            "miss_run_length": self.miss_run_length,
            "recipients": list(self.recipients),
        }


@dataclass(frozen=True)
class EmployeeSnapshot:
    employee_id: str
    name: str
    contact: str


@dataclass(frozen=True)
class ArchiveRecord:
    seq: int
    check: PresenceCheck
    employee: EmployeeSnapshot

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "session_id": self.check.session_id,
            "at": self.check.at,
            "outcome": self.check.outcome.value,
            "best_distance": self.check.best_distance,
            "frame_ref": self.check.frame_ref,
            "employee_id": self.employee.employee_id,
            "employee_name": self.employee.name,
            "employee_contact": self.employee.contact,
        }


@dataclass(frozen=True)
class TrackingConfig:
    n_miss: int = 3
    segment_count: int = 6
    grace_window_s: float = 120.0
    store_present_frames: bool = False

    def __post_init__(self) -> None:
        if self.n_miss < 1:
            raise ValueError(f"n_miss must be >= 1, got {self.n_miss}")
        if self.segment_count < 1:
            raise ValueError(f"segment_count must be >= 1, got {self.segment_count}")


def schedule_checks(
    start: float, end: float, segment_count: int, rng_seed: int, session_id: str = ""
) -> CheckSchedule:
    """Partition [start, end) into equal segments and draw one time per segment.

    Deterministic for a given seed: draws come from ``random.Random(rng_seed)``
    in segment order, each uniform over its own segment.
    """
    span = end - start
    if span <= 0:
        raise InvalidSpan(f"span must be positive, got {span}")
    if segment_count < 1:
        raise ValueError(f"segment_count must be >= 1, got {segment_count}")
    rng = random.Random(rng_seed)
    seg = span / segment_count
    times = tuple(start + i * seg + rng.random() * seg for i in range(segment_count))
    return CheckSchedule(
        session_id=session_id,
        check_times=times,
        segment_count=segment_count,
        rng_seed=rng_seed,
    )


def apply_outcome(miss_run: int, present: bool, n_miss: int) -> tuple[int, bool]:
    """State transition for one check: (new miss run, whether an alert fires).

    The alert fires only on the transition from n_miss-1 to n_miss; longer
    runs stay silent until a present check starts a new run.
    """
    if present:
        return 0, False
    new_run = miss_run + 1
    return new_run, new_run == n_miss


class ArchiveSink(Protocol):
    """Append-only archive with strictly increasing, gap-free sequence numbers."""

    def append(self, check: PresenceCheck, employee: EmployeeSnapshot) -> ArchiveRecord: ...

    def records(self) -> list[ArchiveRecord]: ...


class InMemoryArchive:
    def __init__(self) -> None:
        self._records: list[ArchiveRecord] = []
        self._lock = threading.Lock()

    def append(self, check: PresenceCheck, employee: EmployeeSnapshot) -> ArchiveRecord:
        with self._lock:
            record = ArchiveRecord(seq=len(self._records) + 1, check=check, employee=employee)
            self._records.append(record)
            return record

    def records(self) -> list[ArchiveRecord]:
        return list(self._records)


@dataclass(frozen=True)
class ArchiveFilter:
    employee_id: str | None = None
    session_id: str | None = None
    since: float | None = None
    until: float | None = None

    def matches(self, record: ArchiveRecord) -> bool:
        if self.employee_id is not None and record.employee.employee_id != self.employee_id:
            return False
        if self.session_id is not None and record.check.session_id != self.session_id:
            return False
        if self.since is not None and record.check.at < self.since:
            return False
        if self.until is not None and record.check.at > self.until:
            return False
        return True


class SessionTracker:
    """Session lifecycle plus the check/alert state machine.

    Employee validity is delegated to ``employee_lookup`` (returning a
    snapshot for active employees, None otherwise) so the tracker stays
    independent of the roster implementation. Per-session operations are
    serialized behind one lock; checks against ended sessions are
    rejected.
    """

    def __init__(
        self,
        archive: ArchiveSink,
        employee_lookup: Callable[[str], EmployeeSnapshot | None],
        config: TrackingConfig = TrackingConfig(),
    ) -> None:
        self.archive = archive
        self.config = config
        self._lookup = employee_lookup
        self._lock = threading.RLock()
        self._sessions: dict[str, WorkSession] = {}
        self._schedules: dict[str, CheckSchedule] = {}

    def load_session(self, session: WorkSession, schedule: CheckSchedule | None = None) -> None:
        """Adopt a persisted session (used when restoring from a store)."""
        with self._lock:
            self._sessions[session.session_id] = session
            if schedule is not None:
                self._schedules[session.session_id] = schedule

    def get(self, session_id: str) -> WorkSession:
        session = self._sessions.get(session_id)
        if session is None:
            raise NotFound(f"session {session_id!r} does not exist")
        return session

    def get_schedule(self, session_id: str) -> CheckSchedule:
        schedule = self._schedules.get(session_id)
        if schedule is None:
            raise NotFound(f"session {session_id!r} has no schedule")
        return schedule

    def sessions(self) -> list[WorkSession]:
        with self._lock:
            return sorted(self._sessions.values(), key=lambda s: (s.started_at, s.session_id))

    def active_session_for(self, employee_id: str) -> WorkSession | None:
        with self._lock:
            for session in self._sessions.values():
                if session.employee_id == employee_id and session.active:
                    return session
        return None

    def start_session(
        self,
        employee_id: str,
        now: float,
        planned_duration: float,
        rng_seed: int | None = None,
    ) -> tuple[WorkSession, CheckSchedule]:
        if self._lookup(employee_id) is None:
            raise NotFound(f"employee {employee_id!r} is unknown or inactive")
        with self._lock:
            if self.active_session_for(employee_id) is not None:
                raise SessionExists(f"employee {employee_id!r} already has an active session")
            session_id = uuid.uuid4().hex
            seed = random.SystemRandom().getrandbits(32) if rng_seed is None else rng_seed
            session = WorkSession(
                session_id=session_id, employee_id=employee_id, started_at=now
            )
            schedule = schedule_checks(
                now, now + planned_duration, self.config.segment_count, seed, session_id
            )
            self._sessions[session_id] = session
            self._schedules[session_id] = schedule
            return session, schedule

    def record_check(
        self, session: WorkSession, check: PresenceCheck, config: TrackingConfig | None = None
    ) -> tuple[WorkSession, AlertEvent | None, ArchiveRecord]:
        cfg = config or self.config
        with self._lock:
            if not session.active:
                raise SessionNotActive(f"session {session.session_id!r} has ended")
            present = check.outcome is CheckOutcome.PRESENT
            session.miss_run, fires = apply_outcome(session.miss_run, present, cfg.n_miss)
            session.checks_done += 1
            alert = None
            if fires:
                alert = AlertEvent(
                    alert_id=uuid.uuid4().hex,
                    session_id=session.session_id,
                    employee_id=session.employee_id,
                    triggered_at=check.at,
                    miss_run_length=session.miss_run,
                )
            employee = self._lookup(session.employee_id) or EmployeeSnapshot(
                session.employee_id, "", ""
            )
            record = self.archive.append(check, employee)
            return session, alert, record

    def end_session(
        self, session: WorkSession, now: float, by_admin: bool = False
    ) -> WorkSession:
        with self._lock:
            if not session.active:
                raise SessionNotActive(f"session {session.session_id!r} already ended")
            session.status = (
                SessionStatus.ENDED_BY_ADMIN if by_admin else SessionStatus.ENDED
            )
            session.ended_at = now
            return session

    def force_end_for_employee(self, employee_id: str, now: float) -> list[WorkSession]:
        """Admin-side closure of every active session for an employee."""
        ended = []
        with self._lock:
            for session in self._sessions.values():
                if session.employee_id == employee_id and session.active:
                    self.end_session(session, now, by_admin=True)
                    ended.append(session)
        return ended

    def overdue_check_times(self, session: WorkSession, now: float) -> list[float]:
        """Scheduled times whose grace window has lapsed with no check recorded."""
        schedule = self._schedules.get(session.session_id)
        if schedule is None or not session.active:
            return []
        due = [t for t in schedule.check_times if t + self.config.grace_window_s < now]
        return due[session.checks_done :]

    def query_archive(
        self,
        requester_role: str,
        requester_id: str,
        filter: ArchiveFilter = ArchiveFilter(),
    ) -> list[ArchiveRecord]:
        """Employees read their own history; auditors read all; admins are barred."""
        if requester_role == "admin":
            raise PermissionDenied("admins may not read the presence archive")
        if requester_role == "employee":
            filter = replace(filter, employee_id=requester_id)
        elif requester_role != "auditor":
            raise PermissionDenied(f"role {requester_role!r} may not read the archive")
        return [r for r in self.archive.records() if filter.matches(r)]


class Notifier(Protocol):
    def notify(self, recipient: str, alert: AlertEvent) -> None: ...


class FileLogNotifier:
    """Reference notifier: appends one JSON object per delivery to a sink file."""

    def __init__(self, path: str) -> None:
        self.path = path
        self._lock = threading.Lock()

    def notify(self, recipient: str, alert: AlertEvent) -> None:
        entry = dict(alert.to_dict(), recipient=recipient)
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry) + "\n")


@dataclass(frozen=True)
class Delivery:
    recipient: str
    status: str  # delivered | dead_lettered
    attempts: int


@dataclass(frozen=True)
class DeliveryReceipt:
    alert_id: str
    deliveries: tuple[Delivery, ...]
    duplicate: bool = False


class AlertDispatcher:
    """At-least-once alert delivery with the alert id as idempotency key.

    Each recipient gets up to 1 + ``max_retries`` notify attempts; a
    recipient that still fails is dead-lettered. A later dispatch of the
    same alert id is a no-op once every recipient was delivered.
    """

    def __init__(self, notifier: Notifier, max_retries: int = 3) -> None:
        self.notifier = notifier
        self.max_retries = max_retries
        self.dead_letters: list[tuple[AlertEvent, str]] = []
        self._completed: set[str] = set()
        self._lock = threading.Lock()

    def dispatch(self, alert: AlertEvent) -> DeliveryReceipt:
        with self._lock:
            if alert.alert_id in self._completed:
                return DeliveryReceipt(alert_id=alert.alert_id, deliveries=(), duplicate=True)
            deliveries = []
            all_delivered = True
            for recipient in alert.recipients:
                attempts = 0
                delivered = False
                while attempts < 1 + self.max_retries:
                    attempts += 1
                    try:
                        self.notifier.notify(recipient, alert)
                        delivered = True
                        break
                    except Exception:
                        continue
                if not delivered:
                    all_delivered = False
                    self.dead_letters.append((alert, recipient))
                deliveries.append(
                    Delivery(
                        recipient=recipient,
                        status="delivered" if delivered else "dead_lettered",
                        attempts=attempts,
                    )
                )
            if all_delivered:
                self._completed.add(alert.alert_id)
            return DeliveryReceipt(alert_id=alert.alert_id, deliveries=tuple(deliveries))
