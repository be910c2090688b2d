"""Lesson authoring and publication over the store.

Drafts are freely editable; publishing is the gate that validates every
exercise, snapshots remote background images into the blob store (so later
link rot cannot break recording), verifies the timeline is buildable, and
flips the one-way published flag. Published lessons are immutable.
"""

from __future__ import annotations

import urllib.request
from typing import Callable, Mapping

from .errors import NotFoundError, ValidationError
from .model import (
    Background,
    ExerciseSegment,
    ExerciseSpec,
    Lesson,
    PlaybackPlan,
    PreviewDescriptor,
    RemoteImage,
    Segment,
    VideoSegment,
    build_timeline,
    mode_from_wire,
    preview_descriptor,
    validate_exercise,
)
from .store import BlobRef, RecordWrite, Store
from .util import now_iso

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
JPEG_MAGIC = b"\xff\xd8\xff"


def sniff_image_type(data: bytes) -> str | None:
    if data.startswith(PNG_MAGIC):
        return "png"
    if data.startswith(JPEG_MAGIC):
        return "jpeg"
    return None


def default_fetcher(url: str) -> bytes:
    """Fetch http(s): or data: URLs. Swapped out in tests."""
    with urllib.request.urlopen(url, timeout=10) as resp:
        return resp.read()


class LessonManager:
    def __init__(self, store: Store, fetch_url: Callable[[str], bytes] | None = None):
        self.store = store
        self.fetch_url = fetch_url or default_fetcher

    # -- reads ---------------------------------------------------------------

    def get(self, lesson_id: str) -> Lesson:
        record = self.store.get("lesson", lesson_id)
        if record is None:
            raise NotFoundError("unknown-lesson", lesson_id)
        return Lesson.from_json(record.body)

    def list_lessons(self) -> list[Lesson]:
        return [Lesson.from_json(r.body) for r in self.store.list("lesson")]

    def exercise_context(self, exercise_id: str) -> tuple[ExerciseSpec, str, bool]:
        """Spec, owning lesson id, and the student-gallery-access flag."""
        record = self.store.get("exercise", exercise_id)
        if record is None:
            raise NotFoundError("unknown-exercise", exercise_id)
        return (
            ExerciseSpec.from_json(record.body["spec"]),
            record.body["lesson_id"],
            record.body.get("student_gallery_access", False),
        )

    def timeline(self, lesson_id: str) -> tuple[PlaybackPlan, list[PreviewDescriptor]]:
        lesson = self.get(lesson_id)
        plan = build_timeline(lesson)
        return plan, [preview_descriptor(spec) for spec in lesson.exercise_specs()]

    # -- authoring -----------------------------------------------------------

    def create(self, title: str, owner: str) -> Lesson:
        if not title.strip():
            raise ValidationError("invalid-spec", "lesson title is blank")
        lesson_id = self.store.allocate_id("lesson")
        lesson = Lesson(lesson_id, title, (), False, owner)
        self.store.commit([RecordWrite("lesson", lesson_id, None, lesson.to_json())])
        return lesson

    def _load_for_edit(self, lesson_id: str):
        record = self.store.get("lesson", lesson_id)
        if record is None:
            raise NotFoundError("unknown-lesson", lesson_id)
        lesson = Lesson.from_json(record.body)
        if lesson.published:
            raise ValidationError("lesson-published", f"{lesson_id} is published and immutable")
        return record, lesson

    def add_video_segment(self, lesson_id: str, blob: BlobRef, duration_ms: int | None) -> Lesson:
        record, lesson = self._load_for_edit(lesson_id)
        if not self.store.has_blob(blob.hash):
            raise NotFoundError("missing-blob", blob.hash)
        updated = Lesson(
            lesson.lesson_id,
            lesson.title,
            lesson.segments + (VideoSegment(blob, duration_ms),),
            False,
            lesson.owner,
        )
        self.store.commit([RecordWrite("lesson", lesson_id, record.version, updated.to_json())])
        return updated

    def add_exercise_segment(
        self, lesson_id: str, payload: Mapping, student_gallery_access: bool = False
    ) -> tuple[Lesson, str]:
        """Append a draft exercise. Only the mode must already be one of the
        five representable values; everything else is validated at publish."""
        record, lesson = self._load_for_edit(lesson_id)
        mode = mode_from_wire(payload.get("input_mode", ""))
        background = self._parse_background(payload.get("background"))
        exercise_id = self.store.allocate_id("ex")
        spec = ExerciseSpec(
            exercise_id=exercise_id,
            instructions=payload.get("instructions", ""),
            time_limit_s=payload.get("time_limit_s", 0),
            input_mode=mode,
            background=background,
            created_at=now_iso(),
        )
        updated = Lesson(
            lesson.lesson_id,
            lesson.title,
            lesson.segments + (ExerciseSegment(spec),),
            False,
            lesson.owner,
        )
        self.store.commit(
            [
                RecordWrite("lesson", lesson_id, record.version, updated.to_json()),
                RecordWrite(
                    "exercise",
                    exercise_id,
                    None,
                    {
                        "spec": spec.to_json(),
                        "lesson_id": lesson_id,
                        "student_gallery_access": bool(
                            payload.get("student_gallery_access", student_gallery_access)
                        ),
                    },
                ),
            ]
        )
        return updated, exercise_id

    def _parse_background(self, obj) -> Background | None:
        if obj is None:
            return None
        if isinstance(obj, Mapping):
            if "$blob" in obj:
                return BlobRef.from_json(obj)
            if "url" in obj and isinstance(obj["url"], str):
                return RemoteImage(obj["url"])
        raise ValidationError("invalid-spec", "background must be {'$blob':..} or {'url':..}")

    # -- publication ---------------------------------------------------------

    def publish(self, lesson_id: str) -> Lesson:
        record = self.store.get("lesson", lesson_id)
        if record is None:
            raise NotFoundError("unknown-lesson", lesson_id)
        lesson = Lesson.from_json(record.body)
        if lesson.published:
            return lesson  # one-way flag; republish is a no-op
        if not lesson.segments:
            raise ValidationError("empty-lesson", "publish requires at least one segment")

        snapshots: dict[str, BlobRef] = {}  # exercise_id -> snapshotted background
        for spec in lesson.exercise_specs():
            if isinstance(spec.background, RemoteImage):
                blob = self._snapshot_remote(spec.background)
                if blob is None:
                    raise ValidationError(
                        "background-unavailable",
                        f"exercise {spec.exercise_id}: cannot fetch {spec.background.url}",
                    )
                snapshots[spec.exercise_id] = blob
            violations = validate_exercise(spec, background_ok=self._background_ok)
            if violations:
                v = violations[0]
                raise ValidationError(v.code, f"exercise {spec.exercise_id}: {v.detail}")

        segments: list[Segment] = []
        for seg in lesson.segments:
            if isinstance(seg, ExerciseSegment) and seg.spec.exercise_id in snapshots:
                seg = ExerciseSegment(
                    ExerciseSpec(
                        seg.spec.exercise_id,
                        seg.spec.instructions,
                        seg.spec.time_limit_s,
                        seg.spec.input_mode,
                        snapshots[seg.spec.exercise_id],
                        seg.spec.created_at,
                    )
                )
            segments.append(seg)
        published = Lesson(lesson.lesson_id, lesson.title, tuple(segments), True, lesson.owner)
        build_timeline(published)  # surfaces unknown-duration before the flag flips

        writes = [RecordWrite("lesson", lesson_id, record.version, published.to_json())]
        for seg in published.segments:
            if not isinstance(seg, ExerciseSegment):
                continue
            ex_record = self.store.get("exercise", seg.spec.exercise_id)
            body = dict(ex_record.body)
            body["spec"] = seg.spec.to_json()
            writes.append(
                RecordWrite("exercise", seg.spec.exercise_id, ex_record.version, body)
            )
        self.store.commit(writes)
        return published

    def _background_ok(self, background: Background) -> bool:
        if isinstance(background, BlobRef):
            return background.media_type in ("png", "jpeg") and self.store.has_blob(background.hash)
        return True  # remote images were snapshotted (or rejected) just above

    def _snapshot_remote(self, image: RemoteImage) -> BlobRef | None:
        try:
            data = self.fetch_url(image.url)
        except Exception:
            return None
        media_type = sniff_image_type(data)
        if media_type is None:
            return None
        return self.store.put_blob(data, media_type)
