"""Knowledge-grounded visual question answering at desk scale.

The pipeline ingests question/annotation/attribute JSON, selects external
knowledge only for image attributes relevant to the question, fuses image,
knowledge and question vectors, classifies answers with a small MLP, and
scores predictions with exact match and Wu-Palmer-based WUPS.
"""

from .errors import (
    DimensionMismatch,
    EmptyAttributeSet,
    EmptyDataset,
    IoFailure,
    KvqaError,
    MalformedRecord,
    MissingPrediction,
    NetworkFailure,
    UnknownImage,
    VersionMismatch,
)

__all__ = [
    "DimensionMismatch",
    "EmptyAttributeSet",
    "EmptyDataset",
    "IoFailure",
    "KvqaError",
    "MalformedRecord",
    "MissingPrediction",
    "NetworkFailure",
    "UnknownImage",
    "VersionMismatch",
]
