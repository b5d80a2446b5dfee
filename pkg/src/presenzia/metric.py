"""Triplet loss, difficulty taxonomy, batch-hard mining, and threshold calibration.

All arithmetic runs on squared L2 distances: the hinge loss is
``max(0, d2(a,p) - d2(a,n) + margin)``, triplets are categorized by the
position of the negative relative to the positive-plus-margin boundary,
and pair verification compares the squared distance against a calibrated
threshold.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from .embedding import Embedding, pairwise_squared_distances, squared_l2_distance
from .errors import NoNegatives, NoPositivePairs

DEFAULT_MARGIN = 0.2


class TripletCategory(enum.Enum):
    EASY = "easy"
    SEMI_HARD = "semi_hard"
    HARD = "hard"


@dataclass(frozen=True)
class Triplet:
    """Anchor/positive/negative as indices into a mining batch."""

    anchor: int
    positive: int
    negative: int


@dataclass(frozen=True)
class LabeledPair:
    a: Embedding
    b: Embedding
    same: bool


@dataclass(frozen=True)
class CalibrationResult:
    """Optimal squared-L2 verification threshold over a labeled pair set."""

    threshold: float
    accuracy: float
    num_pairs: int
    candidates_evaluated: int
    degenerate: bool = False
    warning: str | None = None

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "accuracy": self.accuracy,
            "num_pairs": self.num_pairs,
            "candidates_evaluated": self.candidates_evaluated,
            "degenerate": self.degenerate,
            "warning": self.warning,
        }


@dataclass(frozen=True)
class MiningConfig:
    margin: float = DEFAULT_MARGIN
    batch_size: int = 32
    drop_easy: bool = True

    def __post_init__(self) -> None:
        if self.margin <= 0:
            raise ValueError(f"margin must be positive, got {self.margin}")
        if self.batch_size < 3:
            raise ValueError(f"batch_size must be >= 3, got {self.batch_size}")


def triplet_loss_from_distances(d_ap: float, d_an: float, margin: float) -> float:
    return max(0.0, d_ap - d_an + margin)


def triplet_loss(a: Embedding, p: Embedding, n: Embedding, margin: float = DEFAULT_MARGIN) -> float:
    """Hinge penalty pushing the negative at least ``margin`` beyond the positive."""
    if margin <= 0:
        raise ValueError(f"margin must be positive, got {margin}")
    return triplet_loss_from_distances(
        squared_l2_distance(a, p), squared_l2_distance(a, n), margin
    )


def categorize_from_distances(d_ap: float, d_an: float, margin: float) -> TripletCategory:
    if d_an >= d_ap + margin:
        return TripletCategory.EASY
    if d_an <= d_ap:
        return TripletCategory.HARD
    return TripletCategory.SEMI_HARD


def categorize(
    a: Embedding, p: Embedding, n: Embedding, margin: float = DEFAULT_MARGIN
) -> TripletCategory:
    """Classify a triplet: easy (zero loss), hard (negative inside the positive), else semi-hard."""
    if margin <= 0:
        raise ValueError(f"margin must be positive, got {margin}")
    return categorize_from_distances(
        squared_l2_distance(a, p), squared_l2_distance(a, n), margin
    )


def mine_batch_hard(
    embeddings: Sequence[Embedding],
    labels: Sequence[Hashable],
    config: MiningConfig = MiningConfig(),
) -> list[Triplet]:
    """Batch-hard online mining.

    For every ordered anchor-positive pair (same label, distinct indices)
    emit the triplet whose negative is the different-label element closest
    to the anchor; distance ties resolve to the lowest index. Triplets with
    zero loss are dropped when ``config.drop_easy`` is set.
    """
    if len(embeddings) != len(labels):
        raise ValueError("embeddings and labels must have equal length")
    n = len(embeddings)
    if len(set(labels)) < 2:
        raise NoNegatives("mining needs at least two distinct labels in the batch")

    dist = pairwise_squared_distances(embeddings)
    triplets: list[Triplet] = []
    found_pair = False
    for anchor in range(n):
        negatives = [j for j in range(n) if labels[j] != labels[anchor]]
        for positive in range(n):
            if positive == anchor or labels[positive] != labels[anchor]:
                continue
            found_pair = True
            best = negatives[0]
            for j in negatives[1:]:
                if dist[anchor, j] < dist[anchor, best]:
                    best = j
            loss = triplet_loss_from_distances(
                dist[anchor, positive], dist[anchor, best], config.margin
            )
            if config.drop_easy and loss == 0.0:
                continue
            triplets.append(Triplet(anchor, positive, best))
    if not found_pair:
        raise NoPositivePairs("no label occurs twice in the batch")
    return triplets


def verify_pair(a: Embedding, b: Embedding, threshold: float) -> bool:
    """True (same identity) iff the squared L2 distance is within the threshold."""
    if threshold < 0:
        raise ValueError(f"threshold must be non-negative, got {threshold}")
    return squared_l2_distance(a, b) <= threshold


def threshold_candidates(distances: Sequence[float]) -> list[float]:
    """Candidate thresholds: 0, midpoints of adjacent distinct distances, and the max."""
    uniq = sorted(set(float(d) for d in distances))
    cands = [0.0]
    cands.extend((lo + hi) / 2.0 for lo, hi in zip(uniq, uniq[1:]))
    cands.append(uniq[-1])
    return sorted(set(cands))


def calibrate_from_distances(
    distances: Sequence[float], same: Sequence[bool]
) -> CalibrationResult:
    """Pick the squared-distance threshold maximizing pair accuracy.

    Ties resolve to the smallest candidate. All-same or all-different
    inputs yield a flagged degenerate result (threshold 4.0 or 0.0).
    """
    if len(distances) == 0 or len(distances) != len(same):
        raise ValueError("need equally many distances and labels, at least one pair")
    d = np.asarray(distances, dtype=np.float64)
    s = np.asarray(same, dtype=bool)

    if bool(s.all()) or not bool(s.any()):
        threshold = 4.0 if s.all() else 0.0
        accuracy = float(np.mean((d <= threshold) == s))
        kind = "same" if s.all() else "different"
        return CalibrationResult(
            threshold=threshold,
            accuracy=accuracy,
            num_pairs=len(d),
            candidates_evaluated=0,
            degenerate=True,
            warning=f"all pairs labeled {kind}; returning trivial threshold",
        )

    best_t = 0.0
    best_acc = -1.0
    cands = threshold_candidates(d)
    for t in cands:
        acc = float(np.mean((d <= t) == s))
        if acc > best_acc:
            best_acc, best_t = acc, t
    return CalibrationResult(
        threshold=best_t,
        accuracy=best_acc,
        num_pairs=len(d),
        candidates_evaluated=len(cands),
    )


def calibrate_threshold(pairs: Sequence[LabeledPair]) -> CalibrationResult:
    """Calibrate the verification threshold from labeled embedding pairs."""
    distances = [squared_l2_distance(p.a, p.b) for p in pairs]
    return calibrate_from_distances(distances, [p.same for p in pairs])
