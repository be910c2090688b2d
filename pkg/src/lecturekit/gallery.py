"""Review gallery: cards, deterministic sorting/filtering, per-viewer review
state, synchronized playback manifests, likes and threaded comments.

Ordering contract: filters apply conjunctively first, then a total sort by
the requested key with ties always broken by ascending response_id — in both
directions, so reversing the direction reverses the order except within tie
groups. Implemented as a stable two-pass sort.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

from .analysis import LABEL_NO_AUDIO, LABEL_NO_INK
from .errors import ConflictError, NotFoundError, ValidationError
from .lessons import LessonManager
from .model import audio_enabled, ink_enabled, video_enabled
from .sessions import ResponseBundle
from .store import BlobRef, RecordWrite, Store
from .util import now_iso

SORT_KEYS = ("submitted_at", "duration", "student_name", "confidence", "helpfulness")
DIRECTIONS = ("asc", "desc")
MODE_FILTERS = ("ink", "audio", "video")
REVIEW_FILTERS = ("reviewed", "not-reviewed")


@dataclass(frozen=True)
class GalleryCard:
    response_id: str
    student_name: str
    thumbnail_ref: BlobRef | None
    duration_ms: int
    confidence: int
    helpfulness: int
    captured_modes: tuple[str, ...]
    labels: tuple[str, ...]
    submitted_at: str
    reviewed_by_viewer: bool

    def to_json(self) -> dict:
        return {
            "response_id": self.response_id,
            "student_name": self.student_name,
            "thumbnail_ref": self.thumbnail_ref.to_json() if self.thumbnail_ref else None,
            "duration_ms": self.duration_ms,
            "confidence": self.confidence,
            "helpfulness": self.helpfulness,
            "captured_modes": list(self.captured_modes),
            "labels": list(self.labels),
            "submitted_at": self.submitted_at,
            "reviewed_by_viewer": self.reviewed_by_viewer,
        }


@dataclass(frozen=True)
class PlaybackTrack:
    kind: str  # ink | audio | video
    artifact_ref: BlobRef
    clock_origin_ms: int = 0

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "artifact_ref": self.artifact_ref.to_json(),
            "clock_origin_ms": self.clock_origin_ms,
        }


@dataclass(frozen=True)
class PlaybackManifest:
    response_id: str
    duration_ms: int
    tracks: tuple[PlaybackTrack, ...]

    def to_json(self) -> dict:
        return {
            "response_id": self.response_id,
            "duration_ms": self.duration_ms,
            "tracks": [t.to_json() for t in self.tracks],
        }


@dataclass(frozen=True)
class Annotation:
    annotation_id: str
    response_id: str
    author_id: str
    kind: str  # like | comment
    body: str | None
    parent_id: str | None
    created_at: str

    def to_json(self) -> dict:
        return {
            "annotation_id": self.annotation_id,
            "response_id": self.response_id,
            "author_id": self.author_id,
            "kind": self.kind,
            "body": self.body,
            "parent_id": self.parent_id,
            "created_at": self.created_at,
        }

    @classmethod
    def from_record(cls, annotation_id: str, body: dict) -> "Annotation":
        return cls(
            annotation_id,
            body["response_id"],
            body["author_id"],
            body["kind"],
            body.get("body"),
            body.get("parent_id"),
            body["created_at"],
        )


def captured_modes(bundle: ResponseBundle, mode) -> tuple[str, ...]:
    """Modes whose content is really there, post-labeling. Companion audio
    under a video mode is plumbing, not a captured modality, so it never
    shows up here (keeps captured_modes within the exercise's enabled set)."""
    modes = []
    if bundle.ink_ref is not None and ink_enabled(mode) and LABEL_NO_INK not in bundle.labels:
        modes.append("ink")
    if bundle.audio_ref is not None and audio_enabled(mode) and LABEL_NO_AUDIO not in bundle.labels:
        modes.append("audio")
    if bundle.video_ref is not None and video_enabled(mode):
        modes.append("video")
    return tuple(modes)


def review_key(viewer_id: str, response_id: str) -> str:
    return f"{viewer_id}:{response_id}"


class GalleryManager:
    def __init__(self, store: Store, lessons: LessonManager):
        self.store = store
        self.lessons = lessons

    # -- cards ----------------------------------------------------------------

    def list_responses(
        self,
        exercise_id: str,
        sort_key: str = "submitted_at",
        direction: str = "asc",
        mode_present: str | None = None,
        review_status: str | None = None,
        viewer_id: str = "",
    ) -> list[GalleryCard]:
        if sort_key not in SORT_KEYS:
            raise ValidationError("unknown-sort-key", f"{sort_key!r} not in {SORT_KEYS}")
        if direction not in DIRECTIONS:
            raise ValidationError("unknown-direction", f"{direction!r} not in {DIRECTIONS}")
        if mode_present is not None and mode_present not in MODE_FILTERS:
            raise ValidationError("unknown-filter", f"mode_present {mode_present!r}")
        if review_status is not None and review_status not in REVIEW_FILTERS:
            raise ValidationError("unknown-filter", f"review_status {review_status!r}")
        spec, _, _ = self.lessons.exercise_context(exercise_id)

        cards = []
        for record in self.store.list("response"):
            if record.body["exercise_id"] != exercise_id:
                continue
            bundle = ResponseBundle.from_record(record.record_id, record.body)
            card = GalleryCard(
                response_id=bundle.response_id,
                student_name=bundle.student_name,
                thumbnail_ref=bundle.thumbnail_ref,
                duration_ms=bundle.duration_ms,
                confidence=bundle.ratings.confidence,
                helpfulness=bundle.ratings.helpfulness,
                captured_modes=captured_modes(bundle, spec.input_mode),
                labels=bundle.labels,
                submitted_at=bundle.submitted_at,
                reviewed_by_viewer=self._reviewed(viewer_id, bundle.response_id),
            )
            if mode_present is not None and mode_present not in card.captured_modes:
                continue
            if review_status == "reviewed" and not card.reviewed_by_viewer:
                continue
            if review_status == "not-reviewed" and card.reviewed_by_viewer:
                continue
            cards.append(card)

        attr = {"duration": "duration_ms"}.get(sort_key, sort_key)
        cards.sort(key=lambda c: c.response_id)
        cards.sort(key=lambda c: getattr(c, attr), reverse=direction == "desc")
        return cards

    def _reviewed(self, viewer_id: str, response_id: str) -> bool:
        if not viewer_id:
            return False
        return self.store.get("review", review_key(viewer_id, response_id)) is not None

    # -- review state ----------------------------------------------------------

    def mark_reviewed(self, viewer_id: str, response_id: str) -> bool:
        """Flag (viewer, response) reviewed. Idempotent; never regresses."""
        if self.store.get("response", response_id) is None:
            raise NotFoundError("unknown-response", response_id)
        key = review_key(viewer_id, response_id)
        if self.store.get("review", key) is not None:
            return True
        try:
            self.store.commit(
                [
                    RecordWrite(
                        "review",
                        key,
                        None,
                        {
                            "viewer_id": viewer_id,
                            "response_id": response_id,
                            "reviewed_at": now_iso(),
                        },
                    )
                ]
            )
        except ConflictError:
            pass  # concurrent mark by the same viewer; already reviewed
        return True

    # -- playback ----------------------------------------------------------------

    def playback_manifest(self, response_id: str, viewer_id: str) -> PlaybackManifest:
        record = self.store.get("response", response_id)
        if record is None:
            raise NotFoundError("unknown-response", response_id)
        bundle = ResponseBundle.from_record(response_id, record.body)
        if not bundle.processed:
            raise ConflictError("not-yet-processed", response_id)
        tracks = []
        for kind, ref in (("ink", bundle.ink_ref), ("audio", bundle.audio_ref), ("video", bundle.video_ref)):
            if ref is not None:
                tracks.append(PlaybackTrack(kind, ref))
        manifest = PlaybackManifest(response_id, bundle.duration_ms, tuple(tracks))
        if viewer_id:
            self.mark_reviewed(viewer_id, response_id)
        return manifest

    # -- annotations ----------------------------------------------------------------

    def add_annotation(
        self,
        author_id: str,
        response_id: str,
        kind: str,
        body: str | None = None,
        parent_id: str | None = None,
    ) -> Annotation:
        if self.store.get("response", response_id) is None:
            raise NotFoundError("unknown-response", response_id)
        if kind == "like":
            if body:
                raise ValidationError("like-with-body", "likes carry no text")
            if parent_id is not None:
                raise ValidationError("bad-parent", "likes cannot be replies")
            return self._add_like(author_id, response_id)
        if kind == "comment":
            if body is None or not body.strip():
                raise ValidationError("empty-comment", "comment body is required")
            if parent_id is not None:
                parent = self.store.get("annotation", parent_id)
                if (
                    parent is None
                    or parent.body["kind"] != "comment"
                    or parent.body["response_id"] != response_id
                ):
                    raise ValidationError(
                        "bad-parent", f"{parent_id} is not a comment on {response_id}"
                    )
            annotation = Annotation(
                annotation_id=self.store.allocate_id("ann"),
                response_id=response_id,
                author_id=author_id,
                kind="comment",
                body=body,
                parent_id=parent_id,
                created_at=now_iso(),
            )
            self.store.commit(
                [RecordWrite("annotation", annotation.annotation_id, None, annotation.to_json())]
            )
            return annotation
        raise ValidationError("unknown-kind", f"annotation kind {kind!r}")

    def _add_like(self, author_id: str, response_id: str) -> Annotation:
        like_key = f"{response_id}:{author_id}"
        existing = self.store.get("like", like_key)
        if existing is None:
            annotation = Annotation(
                annotation_id=self.store.allocate_id("ann"),
                response_id=response_id,
                author_id=author_id,
                kind="like",
                body=None,
                parent_id=None,
                created_at=now_iso(),
            )
            try:
                self.store.commit(
                    [
                        RecordWrite("like", like_key, None, {"annotation_id": annotation.annotation_id}),
                        RecordWrite("annotation", annotation.annotation_id, None, annotation.to_json()),
                    ]
                )
                return annotation
            except ConflictError:
                existing = self.store.get("like", like_key)  # lost a like race
        record = self.store.get("annotation", existing.body["annotation_id"])
        return Annotation.from_record(record.record_id, record.body)

    def list_annotations(self, response_id: str) -> list[Annotation]:
        if self.store.get("response", response_id) is None:
            raise NotFoundError("unknown-response", response_id)
        return [
            Annotation.from_record(r.record_id, r.body)
            for r in self.store.list("annotation")
            if r.body["response_id"] == response_id
        ]

    # -- export ----------------------------------------------------------------

    EXPORT_COLUMNS = (
        "response_id",
        "student_name",
        "submitted_at",
        "duration_ms",
        "confidence",
        "helpfulness",
        "modes",
        "labels",
        "like_count",
        "comment_count",
    )

    def export_rows(self, exercise_id: str) -> list[dict]:
        spec, _, _ = self.lessons.exercise_context(exercise_id)
        counts: dict[str, dict[str, int]] = {}
        for record in self.store.list("annotation"):
            per = counts.setdefault(record.body["response_id"], {"like": 0, "comment": 0})
            per[record.body["kind"]] += 1
        rows = []
        for record in self.store.list("response"):
            if record.body["exercise_id"] != exercise_id:
                continue
            bundle = ResponseBundle.from_record(record.record_id, record.body)
            per = counts.get(bundle.response_id, {"like": 0, "comment": 0})
            rows.append(
                {
                    "response_id": bundle.response_id,
                    "student_name": bundle.student_name,
                    "submitted_at": bundle.submitted_at,
                    "duration_ms": bundle.duration_ms,
                    "confidence": bundle.ratings.confidence,
                    "helpfulness": bundle.ratings.helpfulness,
                    "modes": "+".join(captured_modes(bundle, spec.input_mode)),
                    "labels": "+".join(bundle.labels),
                    "like_count": per["like"],
                    "comment_count": per["comment"],
                }
            )
        rows.sort(key=lambda r: r["response_id"])
        return rows

    def export_csv(self, exercise_id: str) -> str:
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=self.EXPORT_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(self.export_rows(exercise_id))
        return buffer.getvalue()
