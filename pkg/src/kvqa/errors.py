"""Exception types shared across the pipeline."""


class KvqaError(Exception):
    """Base class for every error this package raises on purpose."""


class IoFailure(KvqaError):
    """A file could not be read or written."""


class MalformedRecord(KvqaError):
    """An input record is missing fields or violates its schema."""


class EmptyDataset(KvqaError):
    """An operation that needs at least one record got none."""


class DimensionMismatch(KvqaError):
    """A vector or matrix has the wrong length for the operation."""


class EmptyAttributeSet(KvqaError):
    """An image has no detected objects to pool or rank."""


class NetworkFailure(KvqaError):
    """The remote knowledge endpoint is unreachable and no fallback applies."""


class MissingPrediction(KvqaError):
    """Evaluation found an annotated question with no prediction."""


class UnknownImage(KvqaError):
    """No attributes are available for the requested image id."""


class VersionMismatch(KvqaError):
    """A checkpoint carries an unsupported version tag."""
