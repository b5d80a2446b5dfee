"""Dynamic identity gallery with KNN identification and unknown rejection.

Identification is a deterministic linear scan: galleries are
company-sized, and index-free scans keep tie-breaking reproducible under
any enrollment order. A query whose nearest neighbor is farther than the
calibrated threshold is rejected as UNKNOWN.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .detection import Cascade, Detection, crop_and_resize
from .embedding import CHIP_CANONICAL_SIDE, Embedding, EmbedderBackend, l2_normalize
from .errors import AlreadyEnrolled, NotEnrolled

UNKNOWN = "UNKNOWN"

DEFAULT_THRESHOLD = 1.24  # squared-L2 verification default; recalibrate per deployment
DEFAULT_K = 3


@dataclass(frozen=True)
class GalleryEntry:
    person_id: str
    embeddings: tuple[Embedding, ...]
    enrolled_at: float

    def __post_init__(self) -> None:
        if not self.embeddings:
            raise ValueError("gallery entry needs at least one embedding")

    def to_json_line(self) -> str:
        return json.dumps(
            {
                "person_id": self.person_id,
                "embeddings": [e.to_list() for e in self.embeddings],
                "enrolled_at": self.enrolled_at,
            }
        )

    @classmethod
    def from_json_line(cls, line: str) -> "GalleryEntry":
        data = json.loads(line)
        return cls(
            person_id=data["person_id"],
            embeddings=tuple(l2_normalize(v) for v in data["embeddings"]),
            enrolled_at=float(data["enrolled_at"]),
        )


@dataclass(frozen=True)
class RecognitionConfig:
    k: int = DEFAULT_K
    threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.threshold < 0:
            raise ValueError(f"threshold must be >= 0, got {self.threshold}")


@dataclass(frozen=True)
class Candidate:
    person_id: str
    distance: float


@dataclass(frozen=True)
class IdentificationResult:
    candidates: tuple[Candidate, ...]
    decision: str

    @property
    def is_unknown(self) -> bool:
        return self.decision == UNKNOWN

    def to_dict(self) -> dict:
        return {
            "decision": self.decision,
            "candidates": [
                {"person_id": c.person_id, "distance": c.distance} for c in self.candidates
            ],
        }


class Gallery:
    """Mutable enrollment gallery with snapshot-read semantics.

    Writers serialize on an internal lock and publish a fresh mapping, so
    concurrent ``identify`` calls always see a consistent snapshot without
    taking the lock.
    """

    def __init__(self, entries: Iterable[GalleryEntry] = ()) -> None:
        self._lock = threading.Lock()
        self._entries: dict[str, GalleryEntry] = {e.person_id: e for e in entries}

    def enroll(
        self,
        person_id: str,
        embeddings: Sequence[Embedding],
        enrolled_at: float | None = None,
    ) -> GalleryEntry:
        entry = GalleryEntry(
            person_id=person_id,
            embeddings=tuple(embeddings),
            enrolled_at=time.time() if enrolled_at is None else enrolled_at,
        )
        with self._lock:
            if person_id in self._entries:
                raise AlreadyEnrolled(f"person {person_id!r} already enrolled")
            updated = dict(self._entries)
            updated[person_id] = entry
            self._entries = updated
        return entry

    def unenroll(self, person_id: str) -> None:
        with self._lock:
            if person_id not in self._entries:
                raise NotEnrolled(f"person {person_id!r} is not enrolled")
            updated = dict(self._entries)
            del updated[person_id]
            self._entries = updated

    def replace(self, person_id: str, embeddings: Sequence[Embedding]) -> GalleryEntry:
        with self._lock:
            if person_id not in self._entries:
                raise NotEnrolled(f"person {person_id!r} is not enrolled")
            entry = GalleryEntry(
                person_id=person_id, embeddings=tuple(embeddings), enrolled_at=time.time()
            )
            updated = dict(self._entries)
            updated[person_id] = entry
            self._entries = updated
        return entry

    def get(self, person_id: str) -> GalleryEntry:
        entry = self._entries.get(person_id)
        if entry is None:
            raise NotEnrolled(f"person {person_id!r} is not enrolled")
        return entry

    def __contains__(self, person_id: str) -> bool:
        return person_id in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def person_ids(self) -> list[str]:
        return sorted(self._entries)

    def entries(self) -> list[GalleryEntry]:
        return [self._entries[pid] for pid in sorted(self._entries)]

    def export_json_lines(self) -> str:
        return "\n".join(e.to_json_line() for e in self.entries())

    @classmethod
    def import_json_lines(cls, text: str) -> "Gallery":
        entries = [
            GalleryEntry.from_json_line(line) for line in text.splitlines() if line.strip()
        ]
        return cls(entries)


def identify(
    query: Embedding, gallery: Gallery, config: RecognitionConfig = RecognitionConfig()
) -> IdentificationResult:
    """KNN identification with unknown rejection.

    Takes the k nearest enrolled embeddings by squared L2 distance and
    decides by majority label; ties resolve to the smaller mean distance,
    then the lexicographically smaller id. The decision is UNKNOWN when
    the nearest distance exceeds the threshold or the gallery is empty.
    """
    scored: list[tuple[float, str, int]] = []
    for entry in gallery.entries():
        vecs = np.stack([e.values for e in entry.embeddings])
        diffs = vecs - query.values
        dists = np.einsum("ij,ij->i", diffs, diffs)
        scored.extend((float(d), entry.person_id, i) for i, d in enumerate(dists))

    if not scored:
        return IdentificationResult(candidates=(), decision=UNKNOWN)

    scored.sort()
    nearest = scored[: config.k]
    candidates = tuple(Candidate(pid, dist) for dist, pid, _ in nearest)

    if candidates[0].distance > config.threshold:
        return IdentificationResult(candidates=candidates, decision=UNKNOWN)

    votes: dict[str, list[float]] = {}
    for cand in candidates:
        votes.setdefault(cand.person_id, []).append(cand.distance)
    best = min(
        votes.items(), key=lambda kv: (-len(kv[1]), sum(kv[1]) / len(kv[1]), kv[0])
    )
    return IdentificationResult(candidates=candidates, decision=best[0])


def recognize_frame(
    image: np.ndarray,
    detector: Cascade,
    embedder: EmbedderBackend,
    gallery: Gallery,
    config: RecognitionConfig = RecognitionConfig(),
    chip_side: int = CHIP_CANONICAL_SIDE,
) -> list[tuple[Detection, IdentificationResult]]:
    """Detect every face in a frame and identify each against the gallery."""
    results = []
    for det in detector.detect(image):
        chip = crop_and_resize(image, det.box, side=chip_side)
        emb = embedder.embed(chip)
        results.append((det, identify(emb, gallery, config)))
    return results
