"""Exception hierarchy shared by all presenzia modules."""


class PresenziaError(Exception):
    """Base class for all presenzia errors."""


class DegenerateVector(PresenziaError):
    """Vector cannot be normalized (zero or non-finite norm)."""


class EmptyBatch(PresenziaError):
    """An operation requiring at least one element got an empty batch."""


class BackendUnavailable(PresenziaError):
    """A detector or embedder backend is missing or failed to load."""


class InvalidImage(PresenziaError):
    """Image buffer is empty, zero-area, or not decodable."""


class InvalidCrop(PresenziaError):
    """Requested crop box lies fully outside the image."""


class NoPositivePairs(PresenziaError):
    """Mining batch contains no anchor-positive pair."""


class NoNegatives(PresenziaError):
    """Mining batch contains a single identity, so no negatives exist."""


class AlreadyEnrolled(PresenziaError):
    """Gallery already holds an entry for this person id."""


class NotEnrolled(PresenziaError):
    """Gallery has no entry for this person id."""


class AlreadyExists(PresenziaError):
    """Directory already holds an employee with this id."""


class NotFound(PresenziaError):
    """Referenced employee, session, or resource does not exist."""


class EnrollmentFailed(PresenziaError):
    """Enrollment images produced no usable embeddings."""


class ValidationError(PresenziaError):
    """A record or patch failed field validation."""


class PermissionDenied(PresenziaError):
    """Caller role is not allowed to perform this operation."""


class SessionExists(PresenziaError):
    """Employee already has an active work session."""


class SessionNotActive(PresenziaError):
    """Operation requires an active session but the session has ended."""


class InvalidSpan(PresenziaError):
    """Schedule span is non-positive."""


class DatasetError(PresenziaError):
    """Dataset manifest or pair file is inconsistent or unresolvable."""
