"""Domain types for lessons, exercises, and the playback timeline.

Everything here is an immutable value plus pure functions over it. An
:class:`ExerciseSpec` is a plain carrier that may hold invalid draft values;
:func:`validate_exercise` is the total validity check and publishing is the
gate that enforces it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping, Union

from .errors import ValidationError
from .store import BlobRef
from .util import now_iso

TIME_LIMIT_MIN_S = 1
TIME_LIMIT_MAX_S = 600


class InputMode(str, Enum):
    """The five response modality combinations a teacher can enable."""

    INK = "ink"
    AUDIO = "audio"
    VIDEO = "video"
    INK_AUDIO = "ink+audio"
    INK_VIDEO = "ink+video"


def mode_from_wire(value: str) -> InputMode:
    try:
        return InputMode(value)
    except ValueError:
        raise ValidationError("unknown-mode", f"not an input mode: {value!r}") from None


def ink_enabled(mode: InputMode) -> bool:
    return mode in (InputMode.INK, InputMode.INK_AUDIO, InputMode.INK_VIDEO)


def audio_enabled(mode: InputMode) -> bool:
    return mode in (InputMode.AUDIO, InputMode.INK_AUDIO)


def video_enabled(mode: InputMode) -> bool:
    return mode in (InputMode.VIDEO, InputMode.INK_VIDEO)


def captures_audio(mode: InputMode) -> bool:
    """True when responses carry an audio track.

    Video modes record microphone audio inside the video; clients upload a
    separately extracted PCM track, so those count too.
    """
    return audio_enabled(mode) or video_enabled(mode)


@dataclass(frozen=True)
class RemoteImage:
    """A background image given by URL, snapshotted to a blob at publish time."""

    url: str


Background = Union[BlobRef, RemoteImage]


@dataclass(frozen=True)
class ExerciseSpec:
    exercise_id: str
    instructions: str
    time_limit_s: int
    input_mode: InputMode
    background: Background | None = None
    created_at: str = field(default_factory=now_iso)

    def to_json(self) -> dict:
        bg = None
        if isinstance(self.background, BlobRef):
            bg = self.background.to_json()
        elif isinstance(self.background, RemoteImage):
            bg = {"url": self.background.url}
        return {
            "exercise_id": self.exercise_id,
            "instructions": self.instructions,
            "time_limit_s": self.time_limit_s,
            "input_mode": self.input_mode.value,
            "background": bg,
            "created_at": self.created_at,
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "ExerciseSpec":
        bg = obj.get("background")
        background: Background | None = None
        if isinstance(bg, Mapping):
            background = BlobRef.from_json(bg) if "$blob" in bg else RemoteImage(bg["url"])
        return cls(
            exercise_id=obj["exercise_id"],
            instructions=obj["instructions"],
            time_limit_s=obj["time_limit_s"],
            input_mode=mode_from_wire(obj["input_mode"]),
            background=background,
            created_at=obj["created_at"],
        )


@dataclass(frozen=True)
class VideoSegment:
    blob: BlobRef
    duration_ms: int | None  # None = duration metadata not yet known


@dataclass(frozen=True)
class ExerciseSegment:
    spec: ExerciseSpec


Segment = Union[VideoSegment, ExerciseSegment]


@dataclass(frozen=True)
class Lesson:
    lesson_id: str
    title: str
    segments: tuple[Segment, ...]
    published: bool
    owner: str

    def exercise_specs(self) -> list[ExerciseSpec]:
        return [s.spec for s in self.segments if isinstance(s, ExerciseSegment)]

    def to_json(self) -> dict:
        segs = []
        for seg in self.segments:
            if isinstance(seg, VideoSegment):
                segs.append({"type": "video", "blob": seg.blob.to_json(), "duration_ms": seg.duration_ms})
            else:
                segs.append({"type": "exercise", "spec": seg.spec.to_json()})
        return {
            "lesson_id": self.lesson_id,
            "title": self.title,
            "segments": segs,
            "published": self.published,
            "owner": self.owner,
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "Lesson":
        segments: list[Segment] = []
        for seg in obj["segments"]:
            if seg["type"] == "video":
                segments.append(VideoSegment(BlobRef.from_json(seg["blob"]), seg["duration_ms"]))
            else:
                segments.append(ExerciseSegment(ExerciseSpec.from_json(seg["spec"])))
        return cls(
            lesson_id=obj["lesson_id"],
            title=obj["title"],
            segments=tuple(segments),
            published=obj["published"],
            owner=obj["owner"],
        )


# -- exercise validation -------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    code: str
    detail: str


def validate_exercise(
    spec: ExerciseSpec | Mapping,
    background_ok: Callable[[Background], bool] | None = None,
) -> list[Violation]:
    """Return all invariant violations of a candidate spec (empty list = ok).

    Accepts either an :class:`ExerciseSpec` or a raw wire payload, so unknown
    input modes are reportable. ``background_ok`` resolves the background
    reference (blob present and image-typed, or remote image fetchable); when
    omitted only structural checks run.
    """
    violations: list[Violation] = []
    if isinstance(spec, Mapping):
        try:
            mode = mode_from_wire(spec.get("input_mode", ""))
        except ValidationError as exc:
            violations.append(Violation("unknown-mode", exc.detail))
            mode = None
        instructions = spec.get("instructions", "")
        limit = spec.get("time_limit_s")
        background = spec.get("background")
        if isinstance(background, Mapping):
            background = (
                BlobRef.from_json(background) if "$blob" in background else RemoteImage(background["url"])
            )
    else:
        mode = spec.input_mode
        instructions = spec.instructions
        limit = spec.time_limit_s
        background = spec.background

    if not isinstance(instructions, str) or not instructions.strip():
        violations.append(Violation("empty-instructions", "instructions are blank"))
    if (
        not isinstance(limit, int)
        or isinstance(limit, bool)
        or not TIME_LIMIT_MIN_S <= limit <= TIME_LIMIT_MAX_S
    ):
        violations.append(
            Violation(
                "limit-out-of-range",
                f"time_limit_s must be {TIME_LIMIT_MIN_S}..{TIME_LIMIT_MAX_S}, got {limit!r}",
            )
        )
    if background is not None and background_ok is not None and not background_ok(background):
        violations.append(Violation("background-unavailable", "background image is not resolvable"))
    # mode is either a valid InputMode or already reported above
    del mode
    return violations


# -- playback timeline ----------------------------------------------------------


@dataclass(frozen=True)
class PlayEntry:
    start_offset_ms: int
    duration_ms: int
    blob: BlobRef

    def to_json(self) -> dict:
        return {
            "kind": "play",
            "start_offset_ms": self.start_offset_ms,
            "duration_ms": self.duration_ms,
            "blob": self.blob.to_json(),
        }


@dataclass(frozen=True)
class PauseEntry:
    exercise_id: str
    offset_ms: int

    def to_json(self) -> dict:
        return {"kind": "pause", "exercise_id": self.exercise_id, "offset_ms": self.offset_ms}


@dataclass(frozen=True)
class PlaybackPlan:
    entries: tuple[Union[PlayEntry, PauseEntry], ...]

    def pauses(self) -> list[PauseEntry]:
        return [e for e in self.entries if isinstance(e, PauseEntry)]

    def to_json(self) -> dict:
        return {"entries": [e.to_json() for e in self.entries]}


def build_timeline(lesson: Lesson) -> PlaybackPlan:
    """Lay the lesson's segments on a single clock, pausing at every exercise.

    Each pause lands at the cumulative duration of all preceding video; the
    plan is a pure function of the lesson.
    """
    if not lesson.segments:
        raise ValidationError("empty-lesson", f"lesson {lesson.lesson_id} has no segments")
    entries: list[Union[PlayEntry, PauseEntry]] = []
    offset = 0
    for seg in lesson.segments:
        if isinstance(seg, VideoSegment):
            if seg.duration_ms is None or seg.duration_ms <= 0:
                raise ValidationError(
                    "unknown-duration",
                    f"video segment {seg.blob.hash[:12]} lacks a positive duration",
                )
            entries.append(PlayEntry(offset, seg.duration_ms, seg.blob))
            offset += seg.duration_ms
        else:
            entries.append(PauseEntry(seg.spec.exercise_id, offset))
    return PlaybackPlan(tuple(entries))


# -- recording-view preview ------------------------------------------------------


@dataclass(frozen=True)
class PreviewDescriptor:
    """Exactly what the recording client renders for a student."""

    exercise_id: str
    instructions: str
    time_limit_s: int
    canvas: bool
    microphone: bool
    camera: bool
    background: Background | None

    def to_json(self) -> dict:
        bg = None
        if isinstance(self.background, BlobRef):
            bg = self.background.to_json()
        elif isinstance(self.background, RemoteImage):
            bg = {"url": self.background.url}
        return {
            "exercise_id": self.exercise_id,
            "instructions": self.instructions,
            "time_limit_s": self.time_limit_s,
            "canvas": self.canvas,
            "microphone": self.microphone,
            "camera": self.camera,
            "background": bg,
        }


def preview_descriptor(spec: ExerciseSpec) -> PreviewDescriptor:
    violations = validate_exercise(spec)
    if violations:
        raise ValidationError(
            "invalid-spec", "; ".join(f"{v.code}: {v.detail}" for v in violations)
        )
    return PreviewDescriptor(
        exercise_id=spec.exercise_id,
        instructions=spec.instructions,
        time_limit_s=spec.time_limit_s,
        canvas=ink_enabled(spec.input_mode),
        microphone=captures_audio(spec.input_mode),
        camera=video_enabled(spec.input_mode),
        background=spec.background,
    )
