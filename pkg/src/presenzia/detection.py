"""Cascaded face detection: proposal -> refine -> output, plus NMS and cropping.

The cascade contract mirrors the usual three-network coarse-to-fine
detector: the proposal stage emits candidate boxes, the refine stage
filters and adjusts them, and the output stage attaches a face
probability and five landmarks. Stage predictors are pluggable; the
reference detector emits a single full-frame detection so every
downstream module can run without model weights.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from .embedding import CHIP_CANONICAL_SIDE, FaceChip
from .errors import InvalidCrop, InvalidImage


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned pixel rectangle, top-left origin."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box sides must be positive, got w={self.w} h={self.h}")

    @property
    def area(self) -> float:
        return self.w * self.h

    def contains(self, px: float, py: float) -> bool:
        return self.x <= px <= self.x + self.w and self.y <= py <= self.y + self.h


@dataclass(frozen=True)
class FaceLandmarks:
    """Five facial points: eyes, nose, mouth corners, in pixel coordinates."""

    left_eye: tuple[float, float]
    right_eye: tuple[float, float]
    nose: tuple[float, float]
    mouth_left: tuple[float, float]
    mouth_right: tuple[float, float]

    def points(self) -> tuple[tuple[float, float], ...]:
        return (self.left_eye, self.right_eye, self.nose, self.mouth_left, self.mouth_right)

    @classmethod
    def at_box_fractions(cls, box: BoundingBox) -> "FaceLandmarks":
        """Landmarks at fixed fractional positions of a box extent."""

        def at(fx: float, fy: float) -> tuple[float, float]:
            return (box.x + fx * box.w, box.y + fy * box.h)

        return cls(
            left_eye=at(0.3, 0.35),
            right_eye=at(0.7, 0.35),
            nose=at(0.5, 0.55),
            mouth_left=at(0.35, 0.75),
            mouth_right=at(0.65, 0.75),
        )


@dataclass(frozen=True)
class Detection:
    """One detected face: box, optional landmarks, face probability."""

    box: BoundingBox
    probability: float
    landmarks: FaceLandmarks | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError(f"probability must be in [0,1], got {self.probability}")
        if self.landmarks is not None:
            for px, py in self.landmarks.points():
                if not self.box.contains(px, py):
                    raise ValueError("landmarks must lie inside the owning box")

    def to_dict(self) -> dict:
        out: dict = {
            "box": {"x": self.box.x, "y": self.box.y, "w": self.box.w, "h": self.box.h},
            "prob": self.probability,
        }
        if self.landmarks is not None:
            out["landmarks"] = [[px, py] for px, py in self.landmarks.points()]
        return out


class Stage(enum.Enum):
    PROPOSAL = "proposal"
    REFINE = "refine"
    OUTPUT = "output"


class StagePredictor(Protocol):
    """One cascade stage.

    ``predict`` receives the full image plus the surviving candidates from
    the previous stage (None for the proposal stage) and returns scored
    detections. Output-stage predictions must carry landmarks.
    """

    stage: Stage

    def predict(
        self, image: np.ndarray, candidates: Sequence[Detection] | None
    ) -> list[Detection]: ...


@dataclass(frozen=True)
class CascadeConfig:
    """Stage score thresholds and plumbing knobs for ``detect``."""

    stage_thresholds: tuple[float, float, float] = (0.6, 0.7, 0.8)
    nms_iou: float = 0.5
    pyramid_scale: float = 0.709
    min_face: int = 20


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two axis-aligned boxes (area = w*h)."""
    ix = max(0.0, min(a.x + a.w, b.x + b.w) - max(a.x, b.x))
    iy = max(0.0, min(a.y + a.h, b.y + b.h) - max(a.y, b.y))
    inter = ix * iy
    union = a.area + b.area - inter
    return inter / union if union > 0 else 0.0


def non_max_suppression(dets: Sequence[Detection], iou_threshold: float) -> list[Detection]:
    """Greedy NMS: keep a detection iff its IoU with every kept one is below threshold.

    Candidates are visited in descending probability; equal probabilities
    keep input order.
    """
    if not 0.0 < iou_threshold < 1.0:
        raise ValueError(f"iou_threshold must be in (0,1), got {iou_threshold}")
    ordered = sorted(enumerate(dets), key=lambda item: (-item[1].probability, item[0]))
    kept: list[Detection] = []
    for _, det in ordered:
        if all(iou(det.box, k.box) < iou_threshold for k in kept):
            kept.append(det)
    return kept


def _validate_image(image: np.ndarray) -> np.ndarray:
    arr = np.asarray(image)
    if arr.ndim != 3 or arr.shape[2] != 3 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise InvalidImage(f"expected non-empty (h, w, 3) image, got shape {arr.shape}")
    return arr


def detect(
    image: np.ndarray,
    stages: Sequence[StagePredictor],
    config: CascadeConfig = CascadeConfig(),
) -> list[Detection]:
    """Run the three-stage cascade over an image.

    After each stage, candidates below that stage's threshold are dropped
    and NMS is applied; the final list is sorted by descending probability
    and every surviving detection carries landmarks.
    """
    arr = _validate_image(image)
    if len(stages) != 3:
        raise ValueError(f"cascade needs exactly 3 stage predictors, got {len(stages)}")

    candidates: Sequence[Detection] | None = None
    for predictor, threshold in zip(stages, config.stage_thresholds):
        if candidates is not None and len(candidates) == 0:
            return []
        raw = predictor.predict(arr, candidates)
        scored = [d for d in raw if d.probability >= threshold]
        candidates = non_max_suppression(scored, config.nms_iou)

    final = sorted(
        enumerate(candidates or []), key=lambda item: (-item[1].probability, item[0])
    )
    out = [det for _, det in final]
    for det in out:
        if det.landmarks is None:
            raise ValueError("output-stage detections must carry landmarks")
    return out


def crop_and_resize(
    image: np.ndarray, box: BoundingBox, side: int = CHIP_CANONICAL_SIDE
) -> FaceChip:
    """Cut a box out of the image and return a square chip of the given side.

    The box is clamped to the image bounds, padded to square by edge
    replication, then bilinearly resized.
    """
    import cv2

    arr = _validate_image(image)
    h, w = arr.shape[:2]
    x0 = max(0, int(np.floor(box.x)))
    y0 = max(0, int(np.floor(box.y)))
    x1 = min(w, int(np.ceil(box.x + box.w)))
    y1 = min(h, int(np.ceil(box.y + box.h)))
    if x1 <= x0 or y1 <= y0:
        raise InvalidCrop(f"box {box} lies outside the {w}x{h} image")

    region = arr[y0:y1, x0:x1]
    rh, rw = region.shape[:2]
    if rh != rw:
        diff = abs(rh - rw)
        before, after = diff // 2, diff - diff // 2
        if rh < rw:
            region = np.pad(region, ((before, after), (0, 0), (0, 0)), mode="edge")
        else:
            region = np.pad(region, ((0, 0), (before, after), (0, 0)), mode="edge")

    if region.shape[0] != side:
        region = cv2.resize(region, (side, side), interpolation=cv2.INTER_LINEAR)
    return FaceChip(region)


@dataclass
class _FullFrameStage:
    stage: Stage

    def predict(
        self, image: np.ndarray, candidates: Sequence[Detection] | None
    ) -> list[Detection]:
        h, w = image.shape[:2]
        box = BoundingBox(0.0, 0.0, float(w), float(h))
        if self.stage is Stage.OUTPUT:
            return [Detection(box, 1.0, FaceLandmarks.at_box_fractions(box))]
        return [Detection(box, 1.0)]


def reference_stages() -> tuple[StagePredictor, StagePredictor, StagePredictor]:
    """Weight-free cascade: one full-frame detection, probability 1.0."""
    return (
        _FullFrameStage(Stage.PROPOSAL),
        _FullFrameStage(Stage.REFINE),
        _FullFrameStage(Stage.OUTPUT),
    )


@dataclass
class Cascade:
    """Bundles three stage predictors with their thresholds."""

    stages: tuple[StagePredictor, StagePredictor, StagePredictor]
    config: CascadeConfig = field(default_factory=CascadeConfig)
    name: str = "cascade"

    def detect(self, image: np.ndarray) -> list[Detection]:
        return detect(image, self.stages, self.config)


def reference_cascade(config: CascadeConfig = CascadeConfig()) -> Cascade:
    return Cascade(reference_stages(), config, name="reference")
