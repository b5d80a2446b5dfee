import numpy as np
import pytest

from presenzia.embedding import EMBEDDING_DIM, Embedding, FaceChip, l2_normalize


def random_embedding(rng: np.random.Generator) -> Embedding:
    return l2_normalize(rng.standard_normal(EMBEDDING_DIM))


def embedding_pair_at(d2: float, axis_a: int = 0, axis_b: int = 1) -> tuple[Embedding, Embedding]:
    """Two unit embeddings whose squared L2 distance is d2 (exact up to float)."""
    cos = 1.0 - d2 / 2.0
    sin = float(np.sqrt(max(0.0, 1.0 - cos * cos)))
    a = np.zeros(EMBEDDING_DIM)
    a[axis_a] = 1.0
    b = np.zeros(EMBEDDING_DIM)
    b[axis_a] = cos
    b[axis_b] = sin
    return Embedding(a), l2_normalize(b)


def basis_embedding(axis: int) -> Embedding:
    v = np.zeros(EMBEDDING_DIM)
    v[axis] = 1.0
    return Embedding(v)


def solid_chip(value: int, side: int = 220) -> FaceChip:
    return FaceChip(np.full((side, side, 3), value, dtype=np.uint8))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
