"""presenzia: remote-attendance verification with face embeddings.

Enroll employees into an embedding gallery, verify presence from
periodically sampled webcam frames (detect -> crop -> embed -> KNN with
unknown rejection), and alert on consecutive recognition misses. Ships
with the metric-learning toolkit (triplet loss, batch-hard mining,
threshold calibration) and a pair-verification evaluation harness.
"""

from .embedding import (
    EMBEDDING_DIM,
    Embedding,
    FaceChip,
    ReferenceEmbedder,
    l2_normalize,
    pairwise_squared_distances,
    squared_l2_distance,
)
from .detection import (
    BoundingBox,
    Cascade,
    CascadeConfig,
    Detection,
    FaceLandmarks,
    crop_and_resize,
    detect,
    non_max_suppression,
    reference_cascade,
)
from .metric import (
    CalibrationResult,
    LabeledPair,
    MiningConfig,
    Triplet,
    TripletCategory,
    calibrate_threshold,
    categorize,
    mine_batch_hard,
    triplet_loss,
    verify_pair,
)
from .gallery import (
    UNKNOWN,
    Gallery,
    GalleryEntry,
    IdentificationResult,
    RecognitionConfig,
    identify,
    recognize_frame,
)

__version__ = "0.1.0"

__all__ = [
    "EMBEDDING_DIM",
    "Embedding",
    "FaceChip",
    "ReferenceEmbedder",
    "l2_normalize",
    "pairwise_squared_distances",
    "squared_l2_distance",
    "BoundingBox",
    "Cascade",
    "CascadeConfig",
    "Detection",
    "FaceLandmarks",
    "crop_and_resize",
    "detect",
    "non_max_suppression",
    "reference_cascade",
    "CalibrationResult",
    "LabeledPair",
    "MiningConfig",
    "Triplet",
    "TripletCategory",
    "calibrate_threshold",
    "categorize",
    "mine_batch_hard",
    "triplet_loss",
    "verify_pair",
    "UNKNOWN",
    "Gallery",
    "GalleryEntry",
    "IdentificationResult",
    "RecognitionConfig",
    "identify",
    "recognize_frame",
    "__version__",
]
