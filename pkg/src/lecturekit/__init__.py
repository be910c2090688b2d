"""Interactive multimedia exercises embedded in lecture videos: authoring,
in-video recording sessions, durable storage, and a review gallery."""

from .backend import Backend
from .errors import (
    ConflictError,
    ForbiddenError,
    LectureKitError,
    NotFoundError,
    StorageError,
    ValidationError,
)
from .gallery import Annotation, GalleryCard, PlaybackManifest, PlaybackTrack
from .ink import InkStream, parse_ink_stream, serialize_ink_stream
from .model import (
    ExerciseSpec,
    InputMode,
    Lesson,
    PlaybackPlan,
    PreviewDescriptor,
    build_timeline,
    validate_exercise,
)
from .sessions import Ratings, RecordingSession, ResponseBundle, SubmissionParts
from .store import BlobRef, Record, RecordWrite, Store

__version__ = "0.1.0"

__all__ = [
    "Backend",
    "BlobRef",
    "Annotation",
    "ConflictError",
    "ExerciseSpec",
    "ForbiddenError",
    "GalleryCard",
    "InkStream",
    "InputMode",
    "LectureKitError",
    "Lesson",
    "NotFoundError",
    "PlaybackManifest",
    "PlaybackPlan",
    "PlaybackTrack",
    "PreviewDescriptor",
    "Ratings",
    "Record",
    "RecordWrite",
    "RecordingSession",
    "ResponseBundle",
    "StorageError",
    "Store",
    "SubmissionParts",
    "ValidationError",
    "build_timeline",
    "parse_ink_stream",
    "serialize_ink_stream",
    "validate_exercise",
]
