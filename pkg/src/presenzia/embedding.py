"""Face embedding vectors, distance math, and embedder backends.

An embedding is a unit-norm 128-float vector; the squared L2 distance
between two unit embeddings lies in [0, 4].

The reference embedder used throughout the test suite is model-free and
bit-exactly specified so that golden vectors stay stable:

1. Convert the RGB chip to grayscale with Rec.601 luma
   ``y = (0.299 R + 0.587 G + 0.114 B) / 255`` in float64.
2. Downscale to a 16x16 grid by exact area averaging (each output cell is
   the mean of the source rectangle it covers, with fractional pixel
   overlap weights).
3. Flatten row-major into 256 features in [0, 1].
4. Compute ``W @ f + b`` where W (128x256) and b (128) hold +/-1 entries
   drawn from a linear congruential generator seeded with 42:
   ``state <- (1664525 * state + 1013904223) mod 2**32``, advanced once
   per draw; an entry is +1.0 when the new state is < 2**31, else -1.0.
   W is filled row-major first (row 0 column 0..255, then row 1, ...),
   followed by the 128 bias entries.
5. L2-normalize the result.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from typing import Protocol, Sequence, runtime_checkable

import numpy as np

from .errors import BackendUnavailable, DegenerateVector, EmptyBatch

EMBEDDING_DIM = 128

CHIP_MIN_SIDE = 80
CHIP_MAX_SIDE = 1024
CHIP_CANONICAL_SIDE = 220

_UNIT_NORM_TOL = 1e-6


def _as_readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Embedding:
    """Unit-norm 128-d face coordinate in Euclidean space."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.shape != (EMBEDDING_DIM,):
            raise ValueError(f"embedding must have {EMBEDDING_DIM} components, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("embedding components must be finite")
        norm = float(np.linalg.norm(arr))
        if abs(norm - 1.0) > _UNIT_NORM_TOL:
            raise ValueError(f"embedding norm {norm} deviates from 1 by more than {_UNIT_NORM_TOL}")
        object.__setattr__(self, "values", _as_readonly(arr))

    def to_list(self) -> list[float]:
        return [float(x) for x in self.values]

    def to_json(self) -> str:
        """JSON array of 128 numbers."""
        return json.dumps(self.to_list())

    def to_bytes(self) -> bytes:
        """128 little-endian 32-bit floats."""
        return struct.pack(f"<{EMBEDDING_DIM}f", *self.values)

    @classmethod
    def from_json(cls, text: str) -> "Embedding":
        return l2_normalize(json.loads(text))

    @classmethod
    def from_bytes(cls, raw: bytes) -> "Embedding":
        vals = struct.unpack(f"<{EMBEDDING_DIM}f", raw)
        return l2_normalize(vals)


def l2_normalize(v: Sequence[float] | np.ndarray) -> Embedding:
    """Scale a 128-vector to unit L2 norm, preserving direction.

    Raises DegenerateVector for the zero vector (direction undefined).
    """
    arr = np.asarray(v, dtype=np.float64)
    if arr.shape != (EMBEDDING_DIM,):
        raise ValueError(f"expected {EMBEDDING_DIM} components, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("vector components must be finite")
    norm = float(np.linalg.norm(arr))
    if norm == 0.0:
        raise DegenerateVector("cannot normalize the zero vector")
    return Embedding(arr / norm)


def squared_l2_distance(a: Embedding, b: Embedding) -> float:
    """Sum of squared component differences; in [0, 4] for unit inputs."""
    diff = a.values - b.values
    return float(np.dot(diff, diff))


def pairwise_squared_distances(embeddings: Sequence[Embedding]) -> np.ndarray:
    """n x n symmetric matrix of squared L2 distances, zero diagonal."""
    if len(embeddings) == 0:
        raise EmptyBatch("pairwise distances need at least one embedding")
    mat = np.stack([e.values for e in embeddings])
    # ||a-b||^2 = ||a||^2 - 2<a,b> + ||b||^2, clipped against rounding noise
    sq = np.sum(mat * mat, axis=1)
    dist = sq[:, None] - 2.0 * (mat @ mat.T) + sq[None, :]
    np.maximum(dist, 0.0, out=dist)
    np.fill_diagonal(dist, 0.0)
    return (dist + dist.T) / 2.0


@dataclass(frozen=True)
class FaceChip:
    """Square RGB crop ready for embedding.

    pixels is a (side, side, 3) uint8 array, row-major.
    """

    pixels: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.pixels, dtype=np.uint8)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError("chip pixels must be (h, w, 3) uint8")
        h, w = arr.shape[:2]
        if h != w:
            raise ValueError(f"chip must be square, got {w}x{h}")
        if not (CHIP_MIN_SIDE <= h <= CHIP_MAX_SIDE):
            raise ValueError(f"chip side {h} outside [{CHIP_MIN_SIDE}, {CHIP_MAX_SIDE}]")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "pixels", arr)

    @property
    def side(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def width(self) -> int:
        return self.side

    @property
    def height(self) -> int:
        return self.side


@runtime_checkable
class EmbedderBackend(Protocol):
    """Anything that maps a face chip to a 128-d embedding."""

    name: str
    input_side: int
    deterministic: bool

    def embed(self, chip: FaceChip) -> Embedding: ...


_LCG_MULT = 1664525
_LCG_INC = 1013904223
_LCG_MOD = 2**32
_LCG_HALF = 2**31


def _lcg_sign_matrix(seed: int, rows: int, cols: int) -> tuple[np.ndarray, np.ndarray]:
    """Projection matrix plus bias vector of +/-1 entries from the LCG stream."""
    state = seed
    total = rows * cols + rows
    signs = np.empty(total, dtype=np.float64)
    for i in range(total):
        state = (_LCG_MULT * state + _LCG_INC) % _LCG_MOD
        signs[i] = 1.0 if state < _LCG_HALF else -1.0
    weights = signs[: rows * cols].reshape(rows, cols)
    bias = signs[rows * cols :]
    return weights, bias


def area_average_grid(gray: np.ndarray, cells: int) -> np.ndarray:
    """Downscale a square float grid to cells x cells by exact area averaging."""
    side = gray.shape[0]
    bounds = np.linspace(0.0, side, cells + 1)
    weights = np.zeros((cells, side), dtype=np.float64)
    for i in range(cells):
        lo, hi = bounds[i], bounds[i + 1]
        first, last = int(np.floor(lo)), int(np.ceil(hi))
        for px in range(first, min(last, side)):
            overlap = min(hi, px + 1.0) - max(lo, float(px))
            if overlap > 0:
                weights[i, px] = overlap
        weights[i] /= hi - lo
    return weights @ gray @ weights.T


class ReferenceEmbedder:
    """Deterministic, model-free embedder for tests and demos.

    Locality-sensitive: nearby chips land close in embedding space, and
    identical chips produce bitwise-identical embeddings.
    """

    name = "reference"
    input_side = 16
    deterministic = True

    def __init__(self) -> None:
        self._weights, self._bias = _lcg_sign_matrix(42, EMBEDDING_DIM, self.input_side**2)

    def features(self, chip: FaceChip) -> np.ndarray:
        rgb = chip.pixels.astype(np.float64)
        gray = (0.299 * rgb[:, :, 0] + 0.587 * rgb[:, :, 1] + 0.114 * rgb[:, :, 2]) / 255.0
        return area_average_grid(gray, self.input_side).reshape(-1)

    def embed(self, chip: FaceChip) -> Embedding:
        raw = self._weights @ self.features(chip) + self._bias
        return l2_normalize(raw)


@dataclass
class CallableEmbedder:
    """Adapter wrapping any model that maps a resized RGB chip to 128 floats.

    The chip is bilinearly resized to ``input_side`` before the call; the
    model output is L2-normalized. Use this to plug in a real pretrained
    backend.
    """

    name: str
    input_side: int
    fn: "object"
    deterministic: bool = False

    def embed(self, chip: FaceChip) -> Embedding:
        import cv2

        pixels = chip.pixels
        if chip.side != self.input_side:
            pixels = cv2.resize(
                pixels, (self.input_side, self.input_side), interpolation=cv2.INTER_LINEAR
            )
        try:
            raw = self.fn(pixels)  # type: ignore[operator]
        except Exception as exc:
            raise BackendUnavailable(f"embedder backend {self.name!r} failed: {exc}") from exc
        return l2_normalize(np.asarray(raw, dtype=np.float64).reshape(-1))


def embed(chip: FaceChip, backend: EmbedderBackend) -> Embedding:
    """Run a chip through an embedder backend."""
    return backend.embed(chip)
