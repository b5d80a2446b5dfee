"""HTTP service binding the recognition pipeline end to end.

Frame uploads are client-sampled stills: each scheduled check the client
posts a JPEG/PNG body to the session's frame endpoint, the service runs
detect -> crop -> embed -> identify, maps the result to a presence
outcome, and persists the check, its archive copy, and any alert in one
transaction. Scheduled checks whose grace window lapses with no upload
are swept in lazily as ``no_face`` misses.
"""

from __future__ import annotations

import base64
import json
import time
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from fastapi import Depends, FastAPI, Header, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .. import backends
from ..directory import EmployeeDirectory, EmployeeRecord, Role, build_enrollment_pipeline
from ..errors import (
    AlreadyEnrolled,
    AlreadyExists,
    BackendUnavailable,
    DatasetError,
    EnrollmentFailed,
    InvalidImage,
    NotEnrolled,
    NotFound,
    PermissionDenied,
    PresenziaError,
    SessionExists,
    SessionNotActive,
    ValidationError,
)
from ..gallery import UNKNOWN, IdentificationResult, recognize_frame
from ..storage import SqliteArchive, Store
from ..tracking import (
    AlertDispatcher,
    AlertEvent,
    ArchiveFilter,
    CheckOutcome,
    FileLogNotifier,
    PresenceCheck,
    SessionTracker,
    WorkSession,
)
from .config import ServiceConfig

_ERROR_CODES: list[tuple[type, int, str]] = [
    (ValidationError, 400, "validation_error"),
    (InvalidImage, 400, "invalid_image"),
    (EnrollmentFailed, 400, "enrollment_failed"),
    (DatasetError, 400, "dataset_error"),
    (PermissionDenied, 403, "permission_denied"),
    (NotFound, 404, "not_found"),
    (NotEnrolled, 404, "not_enrolled"),
    (AlreadyExists, 409, "already_exists"),
    (AlreadyEnrolled, 409, "already_enrolled"),
    (SessionExists, 409, "session_exists"),
    (SessionNotActive, 409, "session_not_active"),
    (BackendUnavailable, 503, "backend_unavailable"),
]


@dataclass(frozen=True)
class Principal:
    principal_id: str
    role: str


class EmployeeCreate(BaseModel):
    employee_id: str
    name: str
    contact: str
    role: str = "employee"
    images: list[str] = Field(default_factory=list, description="base64 JPEG/PNG images")


class EmployeeUpdate(BaseModel):
    name: str | None = None
    contact: str | None = None
    active: bool | None = None
    images: list[str] | None = None


class SessionCreate(BaseModel):
    planned_duration_s: float = 8 * 3600.0
    rng_seed: int | None = None


def decode_image(raw: bytes) -> np.ndarray:
    """Decode JPEG/PNG bytes into an RGB array; InvalidImage otherwise."""
    import cv2

    buf = np.frombuffer(raw, dtype=np.uint8)
    if buf.size == 0:
        raise InvalidImage("empty image payload")
    decoded = cv2.imdecode(buf, cv2.IMREAD_COLOR)
    if decoded is None:
        raise InvalidImage("payload is not a decodable JPEG or PNG image")
    return cv2.cvtColor(decoded, cv2.COLOR_BGR2RGB)


def _decode_b64_images(images: Sequence[str]) -> list[np.ndarray]:
    out = []
    for i, text in enumerate(images):
        try:
            raw = base64.b64decode(text, validate=True)
        except Exception as exc:
            raise InvalidImage(f"image {i} is not valid base64: {exc}") from exc
        out.append(decode_image(raw))
    return out


class ServiceState:
    """Shared singletons: store, gallery, tracker, directory, dispatcher."""

    def __init__(self, config: ServiceConfig, store: Store | None = None) -> None:
        self.config = config
        self.store = store or Store(config.store_path)
        self.detector = backends.get_detector(config.detector_backend)
        self.embedder = backends.get_embedder(config.embedder_backend)
        self.gallery = self.store.load_gallery()
        self.archive = SqliteArchive(self.store)
        pipeline = build_enrollment_pipeline(self.detector, self.embedder)
        self.directory = EmployeeDirectory(
            self.store, self.gallery, None, pipeline, image_saver=self._save_frame_or_ref
        )
        self.tracker = SessionTracker(
            self.archive, self.directory.lookup_active, config.tracking
        )
        self.directory.tracker = self.tracker
        for session, schedule in self.store.load_sessions():
            self.tracker.load_session(session, schedule)
        self.notifier = FileLogNotifier(config.alert_log)
        self.dispatcher = AlertDispatcher(self.notifier)
        self._seed_tokens()

    def _seed_tokens(self) -> None:
        self.store.put_token(self.config.admin_token, "admin", "admin")
        self.store.put_token(self.config.auditor_token, "auditor", "auditor")

    def issue_employee_token(self, employee_id: str) -> str:
        token = uuid.uuid4().hex
        self.store.put_token(token, employee_id, "employee")
        return token

    def authenticate(self, token: str) -> Principal:
        row = self.store.lookup_token(token)
        if row is None:
            raise HTTPException(status_code=403, detail="unknown token")
        return Principal(principal_id=row["principal_id"], role=row["role"])

    def _save_frame_or_ref(self, image: np.ndarray) -> str:
        import cv2

        ref = uuid.uuid4().hex
        if self.config.frames_dir:
            frames = Path(self.config.frames_dir)
            frames.mkdir(parents=True, exist_ok=True)
            cv2.imwrite(str(frames / f"{ref}.png"), cv2.cvtColor(image, cv2.COLOR_RGB2BGR))
        return ref

    # -- presence pipeline --------------------------------------------

    def _classify_results(
        self,
        results: list[tuple[object, IdentificationResult]],
        employee_id: str,
    ) -> tuple[CheckOutcome, str | None, float | None]:
        """Map per-face identifications to (outcome, decision, best distance)."""

        def nearest(ident: IdentificationResult) -> float:
            return ident.candidates[0].distance if ident.candidates else float("inf")

        if not results:
            return CheckOutcome.NO_FACE, None, None
        matching = [r for r in results if r[1].decision == employee_id]
        if matching:
            best = min(nearest(r[1]) for r in matching)
            return CheckOutcome.PRESENT, employee_id, best
        named = [r for r in results if r[1].decision != UNKNOWN]
        if named:
            _, ident = min(named, key=lambda r: nearest(r[1]))
            return CheckOutcome.WRONG_PERSON, ident.decision, nearest(ident)
        dists = [nearest(r[1]) for r in results if r[1].candidates]
        return CheckOutcome.UNKNOWN_FACE, UNKNOWN, min(dists) if dists else None

    def _commit_check(
        self, session: WorkSession, check: PresenceCheck
    ) -> tuple[AlertEvent | None, int]:
        """Persist one check atomically; returns (alert, archive seq)."""
        with self.store.transaction():
            session, alert, record = self.tracker.record_check(session, check)
            self.store.insert_check(check)
            self.store.update_session(session)
            if alert is not None:
                self.store.insert_alert(alert)
        if alert is not None:
            self.dispatcher.dispatch(alert)
        return alert, record.seq

    def sweep_overdue(self, session: WorkSession, now: float) -> list[AlertEvent]:
        """Record a no_face miss for every scheduled check whose grace lapsed."""
        alerts = []
        for at in self.tracker.overdue_check_times(session, now):
            check = PresenceCheck(
                session_id=session.session_id, at=at, outcome=CheckOutcome.NO_FACE
            )
            alert, _ = self._commit_check(session, check)
            if alert is not None:
                alerts.append(alert)
        return alerts

    def handle_frame_submission(
        self, session_id: str, image_bytes: bytes, principal: Principal, now: float | None = None
    ) -> dict:
        session = self.tracker.get(session_id)
        if principal.role != "employee" or principal.principal_id != session.employee_id:
            raise PermissionDenied("token does not own this session")
        if not session.active:
            raise SessionNotActive(f"session {session_id!r} has ended")
        if len(image_bytes) > self.config.max_frame_bytes:
            raise InvalidImage(
                f"frame exceeds {self.config.max_frame_bytes} bytes"
            )
        image = decode_image(image_bytes)
        now = time.time() if now is None else now
        self.sweep_overdue(session, now)

        results = recognize_frame(
            image, self.detector, self.embedder, self.gallery, self.config.recognition
        )
        outcome, decision, best_distance = self._classify_results(results, session.employee_id)
        frame_ref = None
        if outcome is not CheckOutcome.PRESENT or self.config.tracking.store_present_frames:
            frame_ref = self._save_frame_or_ref(image)
        check = PresenceCheck(
            session_id=session_id,
            at=now,
            outcome=outcome,
            best_distance=best_distance,
            frame_ref=frame_ref,
        )
        alert, seq = self._commit_check(session, check)
        return {
            "session_id": session_id,
            "outcome": outcome.value,
            "decision": decision,
            "best_distance": best_distance,
            "miss_run": session.miss_run,
            "checks_done": session.checks_done,
            "archive_seq": seq,
            "alert_id": alert.alert_id if alert else None,
            "faces": [
                {"detection": det.to_dict(), "identification": ident.to_dict()}
                for det, ident in results
            ],
        }

    def session_board(self, now: float | None = None) -> list[dict]:
        now = time.time() if now is None else now
        rows = []
        for session in self.tracker.sessions():
            if session.active:
                self.sweep_overdue(session, now)
            last = self.store.query(
                "SELECT outcome, at FROM checks WHERE session_id = ?"
                " ORDER BY id DESC LIMIT 1",
                (session.session_id,),
            )
            employee = self.store.query(
                "SELECT name FROM employees WHERE employee_id = ?", (session.employee_id,)
            )
            rows.append(
                dict(
                    session.to_dict(),
                    employee_name=employee[0]["name"] if employee else session.employee_id,
                    last_outcome=last[0]["outcome"] if last else None,
                    last_check_at=last[0]["at"] if last else None,
                )
            )
        return rows


def build_app(config: ServiceConfig | None = None, store: Store | None = None) -> FastAPI:
    config = config or ServiceConfig()
    state = ServiceState(config, store=store)
    app = FastAPI(title="presenzia", version="0.1.0")
    app.state.service = state
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    for exc_type, status, code in _ERROR_CODES:
        def _make_handler(status: int, code: str):
            async def handler(_request: Request, exc: Exception) -> JSONResponse:
                return JSONResponse(status_code=status, content={"code": code, "message": str(exc)})

            return handler

        app.add_exception_handler(exc_type, _make_handler(status, code))

    @app.exception_handler(PresenziaError)
    async def _fallback(_request: Request, exc: PresenziaError) -> JSONResponse:
        return JSONResponse(status_code=500, content={"code": "internal", "message": str(exc)})

    @app.exception_handler(HTTPException)
    async def _http(_request: Request, exc: HTTPException) -> JSONResponse:
        codes = {401: "unauthorized", 403: "forbidden", 404: "not_found", 413: "too_large"}
        return JSONResponse(
            status_code=exc.status_code,
            content={"code": codes.get(exc.status_code, "error"), "message": str(exc.detail)},
        )

    @app.exception_handler(RequestValidationError)
    async def _request_validation(_request: Request, exc: RequestValidationError) -> JSONResponse:
        return JSONResponse(
            status_code=400, content={"code": "validation_error", "message": str(exc.errors())}
        )

    def principal(authorization: str | None = Header(default=None)) -> Principal:
        if not authorization or not authorization.startswith("Bearer "):
            raise HTTPException(status_code=401, detail="missing bearer token")
        return state.authenticate(authorization.removeprefix("Bearer ").strip())

    def require(p: Principal, *roles: str) -> None:
        if p.role not in roles:
            raise PermissionDenied(f"role {p.role!r} may not call this endpoint")

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    @app.get("/whoami")
    def whoami(p: Principal = Depends(principal)) -> dict:
        return {"principal_id": p.principal_id, "role": p.role}

    @app.post("/employees", status_code=201)
    def create_employee(body: EmployeeCreate, p: Principal = Depends(principal)) -> dict:
        require(p, "admin")
        images = _decode_b64_images(body.images)
        record = EmployeeRecord(
            employee_id=body.employee_id,
            name=body.name,
            contact=body.contact,
            role=Role(body.role),
        )
        created = state.directory.add_employee(record, images, caller_role=p.role)
        token = state.issue_employee_token(created.employee_id)
        return {"employee": created.to_dict(), "token": token}

    @app.get("/employees")
    def list_employees(p: Principal = Depends(principal)) -> list[dict]:
        require(p, "admin")
        return [r.to_dict() for r in state.directory.list_employees()]

    @app.put("/employees/{employee_id}")
    def update_employee(
        employee_id: str, body: EmployeeUpdate, p: Principal = Depends(principal)
    ) -> dict:
        require(p, "admin")
        patch = {
            k: v
            for k, v in (("name", body.name), ("contact", body.contact), ("active", body.active))
            if v is not None
        }
        images = _decode_b64_images(body.images) if body.images else None
        updated = state.directory.update_employee(
            employee_id, patch, new_images=images, caller_role=p.role
        )
        return {"employee": updated.to_dict()}

    @app.delete("/employees/{employee_id}")
    def delete_employee(employee_id: str, p: Principal = Depends(principal)) -> dict:
        require(p, "admin")
        state.directory.delete_employee(employee_id, caller_role=p.role)
        return {"status": "deleted", "employee_id": employee_id}

    @app.post("/sessions", status_code=201)
    def start_session(body: SessionCreate, p: Principal = Depends(principal)) -> dict:
        require(p, "employee")
        session, schedule = state.tracker.start_session(
            p.principal_id, time.time(), body.planned_duration_s, rng_seed=body.rng_seed
        )
        with state.store.transaction():
            state.store.insert_session(session, schedule)
        return {"session": session.to_dict(), "schedule": schedule.to_dict()}

    @app.get("/sessions")
    def list_sessions(p: Principal = Depends(principal)) -> list[dict]:
        require(p, "admin")
        return state.session_board()

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str, p: Principal = Depends(principal)) -> dict:
        session = state.tracker.get(session_id)
        if p.role != "admin" and not (
            p.role == "employee" and p.principal_id == session.employee_id
        ):
            raise PermissionDenied("token may not view this session")
        if session.active:
            state.sweep_overdue(session, time.time())
        return {
            "session": session.to_dict(),
            "schedule": state.tracker.get_schedule(session_id).to_dict(),
        }

    @app.post("/sessions/{session_id}/frames")
    async def submit_frame(
        session_id: str, request: Request, p: Principal = Depends(principal)
    ) -> dict:
        raw = await request.body()
        return state.handle_frame_submission(session_id, raw, p)

    @app.post("/sessions/{session_id}/end")
    def end_session(session_id: str, p: Principal = Depends(principal)) -> dict:
        session = state.tracker.get(session_id)
        if p.role != "employee" or p.principal_id != session.employee_id:
            raise PermissionDenied("token does not own this session")
        state.tracker.end_session(session, time.time())
        with state.store.transaction():
            state.store.update_session(session)
        return {"session": session.to_dict()}

    @app.get("/alerts")
    def list_alerts(p: Principal = Depends(principal)) -> list[dict]:
        require(p, "admin", "employee")
        employee_id = None if p.role == "admin" else p.principal_id
        return [
            {
                "alert_id": row["alert_id"],
                "session_id": row["session_id"],
                "employee_id": row["employee_id"],
                "triggered_at": row["triggered_at"],
                "miss_run_length": row["miss_run_length"],
                "recipients": json.loads(row["recipients"]),
            }
            for row in state.store.list_alerts(employee_id)
        ]

    @app.get("/archive")
    def read_archive(
        p: Principal = Depends(principal),
        self: int = 0,
        session_id: str | None = None,
        since: float | None = None,
        until: float | None = None,
        employee_id: str | None = None,
    ) -> list[dict]:
        if p.role == "employee" and not self:
            raise PermissionDenied("employees must query their own archive with ?self=1")
        records = state.tracker.query_archive(
            p.role,
            p.principal_id,
            ArchiveFilter(
                employee_id=employee_id, session_id=session_id, since=since, until=until
            ),
        )
        return [r.to_dict() for r in records]

    ui_dir = config.ui_dir or "frontend/dist"
    if Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def write_openapi(app: FastAPI, path: str | Path) -> Path:
    import json

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(app.openapi(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
