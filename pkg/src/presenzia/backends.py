"""Named detector/embedder backends.

``reference`` backends are built in and weight-free. A ``real`` backend
(pretrained cascade + embedding model) is plugged in at runtime via the
register functions; asking for an unregistered name raises
BackendUnavailable rather than silently downgrading.
"""

from __future__ import annotations

from typing import Callable

from .detection import Cascade, reference_cascade
from .embedding import EmbedderBackend, ReferenceEmbedder
from .errors import BackendUnavailable

_DETECTORS: dict[str, Callable[[], Cascade]] = {"reference": reference_cascade}
_EMBEDDERS: dict[str, Callable[[], EmbedderBackend]] = {"reference": ReferenceEmbedder}


def register_detector(name: str, factory: Callable[[], Cascade]) -> None:
    _DETECTORS[name] = factory


def register_embedder(name: str, factory: Callable[[], EmbedderBackend]) -> None:
    _EMBEDDERS[name] = factory


def get_detector(name: str) -> Cascade:
    factory = _DETECTORS.get(name)
    if factory is None:
        raise BackendUnavailable(
            f"detector backend {name!r} is not registered"
            " (register one via presenzia.backends.register_detector)"
        )
    try:
        return factory()
    except BackendUnavailable:
        raise
    except Exception as exc:
        raise BackendUnavailable(f"detector backend {name!r} failed to load: {exc}") from exc


def get_embedder(name: str) -> EmbedderBackend:
    factory = _EMBEDDERS.get(name)
    if factory is None:
        raise BackendUnavailable(
            f"embedder backend {name!r} is not registered"
            " (register one via presenzia.backends.register_embedder)"
        )
    try:
        return factory()
    except BackendUnavailable:
        raise
    except Exception as exc:
        raise BackendUnavailable(f"embedder backend {name!r} failed to load: {exc}") from exc
