"""Recording-session lifecycle: start, re-record, submit.

The submit path is the concurrency-critical piece. Uniqueness per
(exercise, student) and bundle visibility ride on one store commit:
the response record, the submission-index record, and the session's
open→submitted transition land together or not at all. Duplicate
submissions lose the commit (create conflict on the index record) and
are reported as duplicate-submission; artifact blobs written by a
losing submit are unreferenced and fall to the orphan collector.
"""

from __future__ import annotations

import secrets
from dataclasses import dataclass, field

from .analysis import measure_duration, process_response
from .audio import read_wav
from .errors import ConflictError, NotFoundError, ValidationError
from .ink import InkStream, parse_ink_stream, serialize_ink_stream
from .lessons import LessonManager, sniff_image_type
from .model import (
    ExerciseSpec,
    PreviewDescriptor,
    captures_audio,
    ink_enabled,
    preview_descriptor,
    video_enabled,
)
from .store import BlobRef, RecordWrite, Store
from .util import now_iso

GRACE_MS = 2000  # slack over the limit for encoder flush / clock skew

STATE_OPEN = "open"
STATE_DISCARDED = "discarded"
STATE_SUBMITTED = "submitted"


@dataclass(frozen=True)
class Ratings:
    """Five-point self-assessments collected in the submission dialog."""

    confidence: int
    helpfulness: int

    def to_json(self) -> dict:
        return {"confidence": self.confidence, "helpfulness": self.helpfulness}


def parse_ratings(obj) -> Ratings:
    if not isinstance(obj, dict):
        raise ValidationError("invalid-rating", "ratings must be an object")
    values = []
    for key in ("confidence", "helpfulness"):
        v = obj.get(key)
        if isinstance(v, bool) or not isinstance(v, int) or not 1 <= v <= 5:
            raise ValidationError("invalid-rating", f"{key} must be an integer in 1..5, got {v!r}")
        values.append(v)
    return Ratings(*values)


@dataclass(frozen=True)
class RecordingSession:
    session_id: str
    exercise_id: str
    student_id: str
    started_at: str
    state: str

    def to_json(self) -> dict:
        return {
            "exercise_id": self.exercise_id,
            "student_id": self.student_id,
            "started_at": self.started_at,
            "state": self.state,
        }

    @classmethod
    def from_record(cls, session_id: str, body: dict) -> "RecordingSession":
        return cls(
            session_id,
            body["exercise_id"],
            body["student_id"],
            body["started_at"],
            body["state"],
        )


@dataclass(frozen=True)
class SubmissionParts:
    """Raw artifact bytes as uploaded; every part is optional per mode."""

    ink: bytes | None = None
    audio: bytes | None = None
    video: bytes | None = None
    poster: bytes | None = None


@dataclass(frozen=True)
class ResponseBundle:
    response_id: str
    exercise_id: str
    student_id: str
    student_name: str
    submitted_at: str
    duration_ms: int
    ink_ref: BlobRef | None
    audio_ref: BlobRef | None
    video_ref: BlobRef | None
    poster_ref: BlobRef | None
    ratings: Ratings
    labels: tuple[str, ...] = ()
    thumbnail_ref: BlobRef | None = None
    consistency_warnings: tuple[str, ...] = ()
    processed: bool = False

    def to_json(self) -> dict:
        def ref(r):
            return r.to_json() if r is not None else None

        return {
            "exercise_id": self.exercise_id,
            "student_id": self.student_id,
            "student_name": self.student_name,
            "submitted_at": self.submitted_at,
            "duration_ms": self.duration_ms,
            "ink_ref": ref(self.ink_ref),
            "audio_ref": ref(self.audio_ref),
            "video_ref": ref(self.video_ref),
            "poster_ref": ref(self.poster_ref),
            "ratings": self.ratings.to_json(),
            "labels": list(self.labels),
            "thumbnail_ref": ref(self.thumbnail_ref),
            "consistency_warnings": list(self.consistency_warnings),
            "processed": self.processed,
        }

    @classmethod
    def from_record(cls, response_id: str, body: dict) -> "ResponseBundle":
        def ref(obj):
            return BlobRef.from_json(obj) if obj else None

        return cls(
            response_id=response_id,
            exercise_id=body["exercise_id"],
            student_id=body["student_id"],
            student_name=body.get("student_name", body["student_id"]),
            submitted_at=body["submitted_at"],
            duration_ms=body["duration_ms"],
            ink_ref=ref(body.get("ink_ref")),
            audio_ref=ref(body.get("audio_ref")),
            video_ref=ref(body.get("video_ref")),
            poster_ref=ref(body.get("poster_ref")),
            ratings=Ratings(**body["ratings"]),
            labels=tuple(body.get("labels", ())),
            thumbnail_ref=ref(body.get("thumbnail_ref")),
            consistency_warnings=tuple(body.get("consistency_warnings", ())),
            processed=body.get("processed", False),
        )


def submission_key(exercise_id: str, student_id: str) -> str:
    return f"{exercise_id}:{student_id}"


@dataclass
class _Parsed:
    ink_stream: InkStream | None = None
    audio_track: object = None
    poster_type: str | None = None
    blob_refs: dict = field(default_factory=dict)


class SessionManager:
    def __init__(self, store: Store, lessons: LessonManager, auto_process: bool = True):
        self.store = store
        self.lessons = lessons
        self.auto_process = auto_process

    # -- lifecycle -----------------------------------------------------------

    def start(self, exercise_id: str, student_id: str) -> tuple[RecordingSession, PreviewDescriptor]:
        spec, lesson_id, _ = self.lessons.exercise_context(exercise_id)
        lesson = self.lessons.get(lesson_id)
        if not lesson.published:
            raise ValidationError("lesson-unpublished", lesson_id)
        session = RecordingSession(
            session_id=secrets.token_hex(16),
            exercise_id=exercise_id,
            student_id=student_id,
            started_at=now_iso(),
            state=STATE_OPEN,
        )
        self.store.commit([RecordWrite("session", session.session_id, None, session.to_json())])
        return session, preview_descriptor(spec)

    def get(self, session_id: str) -> RecordingSession:
        record = self.store.get("session", session_id)
        if record is None:
            raise NotFoundError("unknown-session", session_id)
        return RecordingSession.from_record(session_id, record.body)

    def discard_and_rerecord(self, session_id: str) -> RecordingSession:
        record = self.store.get("session", session_id)
        if record is None:
            raise NotFoundError("unknown-session", session_id)
        old = RecordingSession.from_record(session_id, record.body)
        if old.state != STATE_OPEN:
            raise ConflictError("session-terminal", f"{session_id} is {old.state}")
        fresh = RecordingSession(
            session_id=secrets.token_hex(16),
            exercise_id=old.exercise_id,
            student_id=old.student_id,
            started_at=now_iso(),
            state=STATE_OPEN,
        )
        discarded = dict(record.body, state=STATE_DISCARDED)
        self.store.commit(
            [
                RecordWrite("session", session_id, record.version, discarded),
                RecordWrite("session", fresh.session_id, None, fresh.to_json()),
            ]
        )
        return fresh

    # -- submit --------------------------------------------------------------

    def submit(
        self,
        session_id: str,
        parts: SubmissionParts,
        declared_duration_ms: int | None,
        ratings,
    ) -> ResponseBundle:
        record = self.store.get("session", session_id)
        if record is None:
            raise NotFoundError("unknown-session", session_id)
        session = RecordingSession.from_record(session_id, record.body)
        if session.state != STATE_OPEN:
            raise ConflictError("session-terminal", f"{session_id} is {session.state}")
        if not isinstance(ratings, Ratings):
            ratings = parse_ratings(ratings)
        spec, _, _ = self.lessons.exercise_context(session.exercise_id)

        parsed = self._parse_artifacts(parts, declared_duration_ms)
        self._check_mode(spec, parts)

        duration_ms, warnings = measure_duration(
            ink_duration_ms=parsed.ink_stream.duration_ms if parsed.ink_stream else None,
            audio=parsed.audio_track,
            video_duration_ms=declared_duration_ms if parts.video is not None else None,
            declared_duration_ms=declared_duration_ms,
        )
        limit_ms = spec.time_limit_s * 1000 + GRACE_MS
        if duration_ms > limit_ms:
            raise ValidationError(
                "over-limit", f"duration {duration_ms} ms exceeds {limit_ms} ms"
            )

        refs = self._store_artifacts(parts, parsed)
        response_id = self.store.allocate_id("resp")
        bundle = ResponseBundle(
            response_id=response_id,
            exercise_id=session.exercise_id,
            student_id=session.student_id,
            student_name=self._display_name(session.student_id),
            submitted_at=now_iso(),
            duration_ms=duration_ms,
            ink_ref=refs.get("ink"),
            audio_ref=refs.get("audio"),
            video_ref=refs.get("video"),
            poster_ref=refs.get("poster"),
            ratings=ratings,
            consistency_warnings=tuple(warnings),
        )
        key = submission_key(session.exercise_id, session.student_id)
        writes = [
            RecordWrite("submission", key, None, {"response_id": response_id}),
            RecordWrite("response", response_id, None, bundle.to_json()),
            RecordWrite("session", session_id, record.version, dict(record.body, state=STATE_SUBMITTED)),
        ]
        try:
            self.store.commit(writes, require_blobs=[r.hash for r in refs.values()])
        except ConflictError:
            # Decide which race lost: another submit for this (exercise, student)
            # or a terminal transition on this very session.
            if self.store.get("submission", key) is not None:
                raise ConflictError(
                    "duplicate-submission",
                    f"{session.student_id} already submitted for {session.exercise_id}",
                ) from None
            current = self.store.get("session", session_id)
            if current is not None and current.body["state"] != STATE_OPEN:
                raise ConflictError("session-terminal", session_id) from None
            raise

        if self.auto_process:
            body = process_response(self.store, response_id)
            return ResponseBundle.from_record(response_id, body)
        return bundle

    # -- submit helpers ------------------------------------------------------

    def _parse_artifacts(self, parts: SubmissionParts, declared_duration_ms) -> _Parsed:
        if parts.ink is None and parts.audio is None and parts.video is None:
            raise ValidationError("malformed-artifact", "submission has no recorded artifacts")
        if declared_duration_ms is not None and (
            isinstance(declared_duration_ms, bool)
            or not isinstance(declared_duration_ms, int)
            or declared_duration_ms < 0
        ):
            raise ValidationError(
                "malformed-artifact", "declared duration_ms must be a non-negative integer"
            )
        parsed = _Parsed()
        if parts.ink is not None:
            try:
                parsed.ink_stream = parse_ink_stream(parts.ink)
            except ValidationError as exc:
                raise ValidationError("malformed-artifact", f"ink: {exc.code}: {exc.detail}") from exc
        if parts.audio is not None:
            try:
                parsed.audio_track = read_wav(parts.audio)
            except ValidationError as exc:
                raise ValidationError("malformed-artifact", f"audio: {exc.code}: {exc.detail}") from exc
        if parts.video is not None:
            if not parts.video:
                raise ValidationError("malformed-artifact", "video part is empty")
            if declared_duration_ms is None:
                raise ValidationError(
                    "malformed-artifact", "video requires a declared duration_ms"
                )
            if parts.audio is None:
                # Camera capture records the microphone too; analysis needs the
                # extracted PCM track because the container itself is opaque.
                raise ValidationError(
                    "malformed-artifact", "video requires its extracted audio track"
                )
        if parts.poster is not None:
            parsed.poster_type = sniff_image_type(parts.poster)
            if parsed.poster_type is None:
                raise ValidationError("malformed-artifact", "poster is not PNG or JPEG")
        return parsed

    def _check_mode(self, spec: ExerciseSpec, parts: SubmissionParts) -> None:
        mode = spec.input_mode
        if parts.ink is not None and not ink_enabled(mode):
            raise ValidationError("mode-mismatch", f"ink artifact not allowed for {mode.value}")
        if parts.audio is not None and not captures_audio(mode):
            raise ValidationError("mode-mismatch", f"audio artifact not allowed for {mode.value}")
        if parts.video is not None and not video_enabled(mode):
            raise ValidationError("mode-mismatch", f"video artifact not allowed for {mode.value}")
        if parts.poster is not None and not video_enabled(mode):
            raise ValidationError("mode-mismatch", f"poster only accompanies video ({mode.value})")

    def _store_artifacts(self, parts: SubmissionParts, parsed: _Parsed) -> dict[str, BlobRef]:
        refs: dict[str, BlobRef] = {}
        if parsed.ink_stream is not None:
            # Canonical bytes, so identical drawings dedupe regardless of the
            # client's JSON whitespace.
            refs["ink"] = self.store.put_blob(serialize_ink_stream(parsed.ink_stream), "ink-json")
        if parts.audio is not None:
            refs["audio"] = self.store.put_blob(parts.audio, "wav")
        if parts.video is not None:
            refs["video"] = self.store.put_blob(parts.video, "video")
        if parts.poster is not None:
            refs["poster"] = self.store.put_blob(parts.poster, parsed.poster_type)
        return refs

    def _display_name(self, student_id: str) -> str:
        record = self.store.get("user", student_id)
        if record is None:
            return student_id
        return record.body.get("display_name", student_id)

    # -- queries used by processing and tests ---------------------------------

    def response(self, response_id: str) -> ResponseBundle:
        record = self.store.get("response", response_id)
        if record is None:
            raise NotFoundError("unknown-response", response_id)
        return ResponseBundle.from_record(response_id, record.body)

    def responses_for_exercise(self, exercise_id: str) -> list[ResponseBundle]:
        return [
            ResponseBundle.from_record(r.record_id, r.body)
            for r in self.store.list("response")
            if r.body["exercise_id"] == exercise_id
        ]

    def process_pending(self) -> int:
        """Finish post-processing for bundles that missed it (crash recovery)."""
        done = 0
        for record in self.store.list("response"):
            if not record.body.get("processed", False):
                process_response(self.store, record.record_id)
                done += 1
        return done
