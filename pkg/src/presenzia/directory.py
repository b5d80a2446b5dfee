"""Employee roster CRUD, kept separate from the biometric gallery.

Identity metadata lives in the relational store; embeddings live in the
gallery. Every mutation is admin-only and atomic: the store transaction
commits first, then the in-memory gallery and session tracker are
updated (which cannot fail), so a rejected operation leaves all three
structures untouched. No retraining happens anywhere: enrollment just
adds vectors, deletion just removes them.
"""

from __future__ import annotations

import csv
import enum
import json
import re
import time
import uuid
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .detection import Cascade, crop_and_resize
from .embedding import CHIP_CANONICAL_SIDE, EmbedderBackend, Embedding
from .errors import (
    AlreadyExists,
    EnrollmentFailed,
    NotFound,
    PermissionDenied,
    ValidationError,
)
from .gallery import Gallery
from .storage import Store
from .tracking import EmployeeSnapshot, SessionTracker

_EMAIL_RE = re.compile(r"^[^@\s]+@[^@\s]+\.[^@\s]+$")


class Role(enum.Enum):
    ADMIN = "admin"
    EMPLOYEE = "employee"


@dataclass(frozen=True)
class EmployeeRecord:
    employee_id: str
    name: str
    contact: str
    role: Role = Role.EMPLOYEE
    active: bool = True
    enrollment_image_refs: tuple[str, ...] = ()

    def snapshot(self) -> EmployeeSnapshot:
        return EmployeeSnapshot(self.employee_id, self.name, self.contact)

    def to_dict(self) -> dict:
        return {
            "employee_id": self.employee_id,
            "name": self.name,
            "contact": self.contact,
            "role": self.role.value,
            "active": self.active,
            "enrollment_image_refs": list(self.enrollment_image_refs),
        }


def _validate_record(employee_id: str, name: str, contact: str) -> None:
    if not employee_id or not employee_id.strip():
        raise ValidationError("employee_id must be non-empty")
    if not name or not name.strip():
        raise ValidationError("name must be non-empty")
    if not _EMAIL_RE.match(contact):
        raise ValidationError(f"contact {contact!r} is not a valid email address")


def build_enrollment_pipeline(
    detector: Cascade,
    embedder: EmbedderBackend,
    chip_side: int = CHIP_CANONICAL_SIDE,
) -> Callable[[Sequence[np.ndarray]], list[Embedding]]:
    """Detect the best face in each image and embed it.

    The returned callable raises EnrollmentFailed if any image yields no
    detection, so a partially unusable enrollment set never half-enrolls.
    """

    def pipeline(images: Sequence[np.ndarray]) -> list[Embedding]:
        embeddings = []
        for i, image in enumerate(images):
            detections = detector.detect(image)
            if not detections:
                raise EnrollmentFailed(f"no face detected in enrollment image {i}")
            chip = crop_and_resize(image, detections[0].box, side=chip_side)
            embeddings.append(embedder.embed(chip))
        return embeddings

    return pipeline


class EmployeeDirectory:
    """Admin-gated roster operations wired through store, gallery, and tracker."""

    def __init__(
        self,
        store: Store,
        gallery: Gallery,
        tracker: SessionTracker | None,
        enroll_pipeline: Callable[[Sequence[np.ndarray]], list[Embedding]],
        image_saver: Callable[[np.ndarray], str] | None = None,
    ) -> None:
        self.store = store
        self.gallery = gallery
        self.tracker = tracker
        self.enroll_pipeline = enroll_pipeline
        self.image_saver = image_saver or (lambda _img: uuid.uuid4().hex)

    def _require_admin(self, caller_role: str) -> None:
        if caller_role != Role.ADMIN.value:
            raise PermissionDenied("only admins may modify the employee directory")

    def lookup_active(self, employee_id: str) -> EmployeeSnapshot | None:
        """Session tracker hook: snapshot for active employees, else None."""
        row = self.store.get_employee(employee_id)
        if row is None or not row["active"]:
            return None
        return EmployeeSnapshot(row["employee_id"], row["name"], row["contact"])

    def get_employee(self, employee_id: str) -> EmployeeRecord:
        row = self.store.get_employee(employee_id)
        if row is None:
            raise NotFound(f"employee {employee_id!r} does not exist")
        return self._from_row(row)

    def list_employees(self) -> list[EmployeeRecord]:
        return [self._from_row(row) for row in self.store.list_employees()]

    @staticmethod
    def _from_row(row) -> EmployeeRecord:
        return EmployeeRecord(
            employee_id=row["employee_id"],
            name=row["name"],
            contact=row["contact"],
            role=Role(row["role"]),
            active=bool(row["active"]),
            enrollment_image_refs=tuple(json.loads(row["image_refs"])),
        )

    def add_employee(
        self,
        record: EmployeeRecord,
        enrollment_images: Sequence[np.ndarray],
        caller_role: str = "admin",
    ) -> EmployeeRecord:
        """Create the record and enroll its embeddings in one shot."""
        self._require_admin(caller_role)
        _validate_record(record.employee_id, record.name, record.contact)
        if self.store.get_employee(record.employee_id) is not None:
            raise AlreadyExists(f"employee {record.employee_id!r} already exists")
        if not enrollment_images:
            raise EnrollmentFailed("at least one enrollment image is required")

        embeddings = self.enroll_pipeline(enrollment_images)
        refs = tuple(self.image_saver(img) for img in enrollment_images)
        stored = replace(record, enrollment_image_refs=refs)
        enrolled_at = time.time()
        with self.store.transaction():
            self.store.insert_employee(
                stored.employee_id,
                stored.name,
                stored.contact,
                stored.role.value,
                stored.active,
                list(refs),
            )
            self.store.replace_gallery_rows(stored.employee_id, embeddings, enrolled_at)
        self.gallery.enroll(stored.employee_id, embeddings, enrolled_at)
        return stored

    def update_employee(
        self,
        employee_id: str,
        patch: dict,
        new_images: Sequence[np.ndarray] | None = None,
        caller_role: str = "admin",
    ) -> EmployeeRecord:
        """Patch metadata and, when new images are given, swap the gallery entry.

        Metadata-only updates never touch embeddings; nothing is retrained
        either way.
        """
        self._require_admin(caller_role)
        current = self.get_employee(employee_id)

        unknown = set(patch) - {"name", "contact", "active"}
        if unknown:
            raise ValidationError(f"unknown patch fields: {sorted(unknown)}")
        name = patch.get("name", current.name)
        contact = patch.get("contact", current.contact)
        active = bool(patch.get("active", current.active))
        _validate_record(employee_id, name, contact)

        embeddings = None
        refs = current.enrollment_image_refs
        if new_images:
            embeddings = self.enroll_pipeline(new_images)
            refs = tuple(self.image_saver(img) for img in new_images)

        fields: dict = {"name": name, "contact": contact, "active": active}
        if embeddings is not None:
            fields["image_refs"] = list(refs)
        enrolled_at = time.time()
        with self.store.transaction():
            self.store.update_employee_fields(employee_id, fields)
            if embeddings is not None:
                self.store.replace_gallery_rows(employee_id, embeddings, enrolled_at)
        if embeddings is not None:
            self.gallery.replace(employee_id, embeddings)
        return EmployeeRecord(
            employee_id=employee_id,
            name=name,
            contact=contact,
            role=current.role,
            active=active,
            enrollment_image_refs=refs,
        )

    def delete_employee(
        self, employee_id: str, caller_role: str = "admin", now: float | None = None
    ) -> None:
        """Remove the record, purge embeddings, force-end sessions; archive stays."""
        self._require_admin(caller_role)
        self.get_employee(employee_id)  # NotFound when absent
        now = time.time() if now is None else now
        with self.store.transaction() as conn:
            self.store.delete_gallery_rows(employee_id)
            conn.execute(
                "UPDATE sessions SET status = 'ended_by_admin', ended_at = ?"
                " WHERE employee_id = ? AND status = 'active'",
                (now, employee_id),
            )
            self.store.tombstone_employee(employee_id)
        if employee_id in self.gallery:
            self.gallery.unenroll(employee_id)
        if self.tracker is not None:
            self.tracker.force_end_for_employee(employee_id, now)

    def import_csv(self, lines: Iterable[str], caller_role: str = "admin") -> int:
        """Bootstrap roster metadata from ``id,name,email,role`` rows.

        Creates records without biometric enrollment; gallery entries are
        added later when images arrive.
        """
        self._require_admin(caller_role)
        count = 0
        for row in csv.reader(lines):
            if not row or row[0].strip().lower() in ("id", "employee_id"):
                continue
            if len(row) != 4:
                raise ValidationError(f"expected 4 columns (id,name,email,role), got {row}")
            employee_id, name, contact, role = (c.strip() for c in row)
            _validate_record(employee_id, name, contact)
            if self.store.get_employee(employee_id) is not None:
                raise AlreadyExists(f"employee {employee_id!r} already exists")
            with self.store.transaction():
                self.store.insert_employee(
                    employee_id, name, contact, Role(role).value, True, []
                )
            count += 1
        return count
