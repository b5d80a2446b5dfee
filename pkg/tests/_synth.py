"""Synthetic identity images for pipeline tests.

Each identity is a blocky random pattern; variants add per-pixel noise.
The reference embedder keeps variants of one identity far closer than
images of different identities, so galleries built from these behave
like tiny face datasets.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


def identity_base(rng: np.random.Generator, side: int = 128) -> np.ndarray:
    blocks = rng.integers(0, 256, size=(8, 8, 3), dtype=np.uint8)
    scale = side // 8
    return np.kron(blocks, np.ones((scale, scale, 1), dtype=np.uint8)).astype(np.uint8)


def identity_variant(
    base: np.ndarray, rng: np.random.Generator, noise: int = 25
) -> np.ndarray:
    jitter = rng.integers(-noise, noise + 1, size=base.shape)
    return np.clip(base.astype(np.int64) + jitter, 0, 255).astype(np.uint8)


def make_identities(
    seed: int, count: int, variants: int, side: int = 128, noise: int = 25
) -> dict[str, list[np.ndarray]]:
    """identity id -> list of variant images; deterministic for a seed."""
    rng = np.random.default_rng(seed)
    out = {}
    for i in range(count):
        base = identity_base(rng, side)
        out[f"ident-{i:02d}"] = [identity_variant(base, rng, noise) for _ in range(variants)]
    return out


def make_noisy_cluster_identities(
    seed: int, count: int, variants: int, side: int = 128, block_p: float = 0.3
) -> dict[str, list[np.ndarray]]:
    """Overlapping clusters: variants have random 8x8 blocks swapped out.

    Block-level corruption survives the embedder's area pooling, so
    same-identity and cross-identity distances overlap and verification
    accuracy stays below 1.
    """
    rng = np.random.default_rng(seed)
    scale = side // 8
    out = {}
    for i in range(count):
        base = rng.integers(0, 256, size=(8, 8, 3), dtype=np.uint8)
        images = []
        for _ in range(variants):
            blocks = base.copy()
            mask = rng.random((8, 8)) < block_p
            replacement = rng.integers(0, 256, size=(8, 8, 3), dtype=np.uint8)
            blocks[mask] = replacement[mask]
            images.append(
                np.kron(blocks, np.ones((scale, scale, 1), dtype=np.uint8)).astype(np.uint8)
            )
        out[f"ident-{i:02d}"] = images
    return out


def write_image_dataset(
    root: Path, identities: dict[str, list[np.ndarray]]
) -> dict[str, list[Path]]:
    """Write an LFW-style layout: root/<name>/<name>_{NNNN}.png."""
    import cv2

    paths: dict[str, list[Path]] = {}
    for name, images in identities.items():
        ident_dir = root / name
        ident_dir.mkdir(parents=True, exist_ok=True)
        paths[name] = []
        for i, image in enumerate(images, start=1):
            path = ident_dir / f"{name}_{i:04d}.png"
            cv2.imwrite(str(path), cv2.cvtColor(image, cv2.COLOR_RGB2BGR))
            paths[name].append(path)
    return paths


def write_pair_file(
    path: Path,
    identities: dict[str, list[np.ndarray]],
    rng: np.random.Generator,
    n_same: int,
    n_diff: int,
) -> Path:
    """Random same/different pair lines over the written dataset."""
    names = sorted(identities)
    lines = []
    for _ in range(n_same):
        name = names[rng.integers(len(names))]
        k = len(identities[name])
        i, j = rng.choice(np.arange(1, k + 1), size=2, replace=False)
        lines.append(f"{name} {i} {j}")
    for _ in range(n_diff):
        a, b = rng.choice(len(names), size=2, replace=False)
        na, nb = names[a], names[b]
        i = rng.integers(1, len(identities[na]) + 1)
        j = rng.integers(1, len(identities[nb]) + 1)
        lines.append(f"{na} {i} {nb} {j}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def encode_png(image: np.ndarray) -> bytes:
    import cv2

    ok, buf = cv2.imencode(".png", cv2.cvtColor(image, cv2.COLOR_RGB2BGR))
    assert ok
    return buf.tobytes()
