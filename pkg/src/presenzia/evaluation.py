"""Pair-verification benchmark harness and sample-size ablation.

Works over an LFW-style directory layout (one folder per identity,
images named ``{Name}_{NNNN}``) and a plain-text pair list: three tokens
``name idx1 idx2`` for a same-identity pair, four tokens
``name1 idx1 name2 idx2`` for a different-identity pair. A seeded 10%
holdout calibrates the squared-distance threshold; accuracy is reported
on the remaining pairs.
"""

from __future__ import annotations

import csv
import io
import json
import random
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .detection import Cascade, crop_and_resize
from .embedding import CHIP_CANONICAL_SIDE, EmbedderBackend, Embedding
from .errors import DatasetError
from .metric import calibrate_from_distances, squared_l2_distance

_IMAGE_EXTENSIONS = (".jpg", ".jpeg", ".png")


@dataclass(frozen=True)
class DatasetManifest:
    root: Path
    images: dict[str, tuple[Path, ...]]  # identity -> image paths, sorted

    @property
    def identity_count(self) -> int:
        return len(self.images)

    @property
    def image_count(self) -> int:
        return sum(len(v) for v in self.images.values())

    @classmethod
    def scan(cls, root: str | Path) -> "DatasetManifest":
        root = Path(root)
        if not root.is_dir():
            raise DatasetError(f"dataset root {root} is not a directory")
        images: dict[str, tuple[Path, ...]] = {}
        for ident_dir in sorted(p for p in root.iterdir() if p.is_dir()):
            files = sorted(
                p
                for p in ident_dir.iterdir()
                if p.suffix.lower() in _IMAGE_EXTENSIONS
            )
            if files:
                images[ident_dir.name] = tuple(files)
        return cls(root=root, images=images)

    def resolve(self, name: str, index: int) -> Path:
        """Path for the index-th image of an identity (1-based, 4-digit names)."""
        stem = f"{name}_{index:04d}"
        for ext in _IMAGE_EXTENSIONS:
            candidate = self.root / name / f"{stem}{ext}"
            if candidate.exists():
                return candidate
        raise DatasetError(f"image {stem} not found under {self.root / name}")


@dataclass(frozen=True)
class ImagePair:
    path_a: Path
    path_b: Path
    same: bool


def load_pairs(manifest: DatasetManifest, pair_file: str | Path) -> list[ImagePair]:
    """Resolve a pair-list file against the manifest.

    Malformed or unresolvable lines raise DatasetError carrying the
    1-based line number.
    """
    pairs = []
    with open(pair_file, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens:
                continue
            try:
                if len(tokens) == 3:
                    name, i1, i2 = tokens
                    pairs.append(
                        ImagePair(
                            manifest.resolve(name, int(i1)),
                            manifest.resolve(name, int(i2)),
                            same=True,
                        )
                    )
                elif len(tokens) == 4:
                    n1, i1, n2, i2 = tokens
                    pairs.append(
                        ImagePair(
                            manifest.resolve(n1, int(i1)),
                            manifest.resolve(n2, int(i2)),
                            same=False,
                        )
                    )
                else:
                    raise DatasetError(f"expected 3 or 4 tokens, got {len(tokens)}")
            except (DatasetError, ValueError) as exc:
                raise DatasetError(f"line {lineno}: {exc}") from exc
    return pairs


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    threshold: float
    num_pairs: int
    calibration_pairs: int
    eval_pairs: int
    subset_size: int
    backend: str
    wall_time_s: float
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "threshold": self.threshold,
            "num_pairs": self.num_pairs,
            "calibration_pairs": self.calibration_pairs,
            "eval_pairs": self.eval_pairs,
            "subset_size": self.subset_size,
            "backend": self.backend,
            "wall_time_s": self.wall_time_s,
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EvalReport":
        return cls(
            accuracy=data["accuracy"],
            threshold=data["threshold"],
            num_pairs=data["num_pairs"],
            calibration_pairs=data["calibration_pairs"],
            eval_pairs=data["eval_pairs"],
            subset_size=data["subset_size"],
            backend=data["backend"],
            wall_time_s=data["wall_time_s"],
            warnings=tuple(data["warnings"]),
        )


@dataclass(frozen=True)
class AblationReport:
    rows: tuple[tuple[int, float], ...]  # (subset size, mean accuracy)
    repeats: int
    backend: str
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "rows": [{"size": s, "accuracy": a} for s, a in self.rows],
            "repeats": self.repeats,
            "backend": self.backend,
            "warnings": list(self.warnings),
        }


def _load_rgb(path: Path) -> np.ndarray:
    import cv2

    raw = cv2.imread(str(path), cv2.IMREAD_COLOR)
    if raw is None:
        raise DatasetError(f"could not read image {path}")
    return cv2.cvtColor(raw, cv2.COLOR_BGR2RGB)


def build_embedding_cache(
    detector: Cascade, embedder: EmbedderBackend, chip_side: int = CHIP_CANONICAL_SIDE
) -> Callable[[Path], Embedding]:
    """Per-path memoized detect+crop+embed, so shared images are embedded once."""
    cache: dict[Path, Embedding] = {}

    def embed_path(path: Path) -> Embedding:
        if path not in cache:
            image = _load_rgb(path)
            detections = detector.detect(image)
            if not detections:
                raise DatasetError(f"no face detected in {path}")
            chip = crop_and_resize(image, detections[0].box, side=chip_side)
            cache[path] = embedder.embed(chip)
        return cache[path]

    return embed_path


def evaluate_verification(
    pairs: Sequence[ImagePair],
    detector: Cascade,
    embedder: EmbedderBackend,
    split_seed: int = 0,
    embed_path: Callable[[Path], Embedding] | None = None,
) -> EvalReport:
    """Calibrate on a seeded 10% holdout, report accuracy on the rest.

    A holdout containing a single class falls back to full-set
    calibration, flagged in the report. Fewer than 20 pairs is flagged as
    a small sample rather than rejected so subset ablations can run.
    """
    if len(pairs) < 2:
        raise ValueError(f"need at least 2 pairs, got {len(pairs)}")
    started = time.perf_counter()
    warnings: list[str] = []
    if len(pairs) < 20:
        warnings.append("small_sample: fewer than 20 pairs")

    embed_path = embed_path or build_embedding_cache(detector, embedder)
    distances = np.array(
        [squared_l2_distance(embed_path(p.path_a), embed_path(p.path_b)) for p in pairs]
    )
    same = np.array([p.same for p in pairs], dtype=bool)

    rng = random.Random(split_seed)
    perm = rng.sample(range(len(pairs)), len(pairs))
    h = max(1, round(0.1 * len(pairs)))
    # a single-class holdout cannot be calibrated; grow it (still seeded and
    # disjoint from the eval set) up to half the pairs before giving up
    while h < len(pairs) // 2 and len(set(same[perm[:h]])) < 2:
        h += 1
    hold_idx, eval_idx = perm[:h], perm[h:]

    calibration = calibrate_from_distances(distances[hold_idx], same[hold_idx])
    if calibration.degenerate:
        warnings.append("degenerate_holdout: calibrated on the full pair set")
        calibration = calibrate_from_distances(distances, same)

    predicted = distances[eval_idx] <= calibration.threshold
    accuracy = float(np.mean(predicted == same[eval_idx]))
    return EvalReport(
        accuracy=accuracy,
        threshold=calibration.threshold,
        num_pairs=len(pairs),
        calibration_pairs=len(hold_idx),
        eval_pairs=len(eval_idx),
        subset_size=len(pairs),
        backend=getattr(embedder, "name", "unknown"),
        wall_time_s=time.perf_counter() - started,
        warnings=tuple(warnings),
    )


def ablation_by_subset_size(
    pairs: Sequence[ImagePair],
    sizes: Sequence[int],
    repeats: int,
    detector: Cascade,
    embedder: EmbedderBackend,
    seed: int = 0,
) -> AblationReport:
    """Mean verification accuracy per pair-subset size, averaged over repeats."""
    if list(sizes) != sorted(sizes):
        raise ValueError("sizes must be ascending")
    warnings: list[str] = []
    embed_path = build_embedding_cache(detector, embedder)
    rows = []
    for si, size in enumerate(sizes):
        if size > len(pairs):
            warnings.append(f"size {size} clipped to available {len(pairs)} pairs")
            size = len(pairs)
        accs = []
        for r in range(repeats):
            run_seed = seed + 7919 * si + r
            rng = random.Random(run_seed)
            sample = rng.sample(list(pairs), size)
            report = evaluate_verification(
                sample, detector, embedder, split_seed=run_seed, embed_path=embed_path
            )
            accs.append(report.accuracy)
        rows.append((size, float(np.mean(accs))))
    return AblationReport(
        rows=tuple(rows),
        repeats=repeats,
        backend=getattr(embedder, "name", "unknown"),
        warnings=tuple(warnings),
    )


def emit_report(report: EvalReport | AblationReport, format: str, path: str | Path) -> Path:
    """Serialize a report to json, csv, or markdown.

    csv and markdown render the ablation table (``size,accuracy``); json
    works for both report kinds and round-trips field-for-field.
    """
    if format not in ("json", "csv", "markdown"):
        raise ValueError(f"unsupported format {format!r}")
    path = Path(path)
    if format == "json":
        text = json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    elif format == "csv":
        if not isinstance(report, AblationReport):
            raise ValueError("csv output requires an ablation report")
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["size", "accuracy"])
        for size, acc in report.rows:
            writer.writerow([size, f"{acc:.4f}"])
        text = buf.getvalue()
    else:
        if not isinstance(report, AblationReport):
            raise ValueError("markdown output requires an ablation report")
        lines = [
            "| Pairs | Accuracy |",
            "|-------|----------|",
        ]
        lines.extend(f"| {size} | {acc:.4f} |" for size, acc in report.rows)
        text = "\n".join(lines) + "\n"
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc
    return path
