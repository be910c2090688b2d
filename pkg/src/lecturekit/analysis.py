"""Post-processing of submitted responses.

After a bundle is committed the pipeline derives navigation metadata: the
"no-audio" / "no-ink" labels, the gallery thumbnail, and the measured
duration with cross-track consistency warnings. All derivations are pure
over the immutable artifacts, so reprocessing is a fixed point.
"""

from __future__ import annotations

from .audio import AudioTrack, detect_silence, read_wav
from .errors import NotFoundError, StorageError, ValidationError
from .ink import InkStream, has_ink, parse_ink_stream
from .model import ExerciseSpec, InputMode, captures_audio, ink_enabled
from .render import audio_placeholder, decode_image, encode_png, final_frame
from .store import BlobRef, RecordWrite, Store

LABEL_NO_AUDIO = "no-audio"
LABEL_NO_INK = "no-ink"

THUMBNAIL_W = 320
THUMBNAIL_H = 240

#: track durations this many ms apart (or more) get a consistency warning
DURATION_MISMATCH_MS = 1000


def measure_duration(
    ink_duration_ms: int | None = None,
    audio: AudioTrack | None = None,
    video_duration_ms: int | None = None,
    declared_duration_ms: int | None = None,
) -> tuple[int, list[str]]:
    """Longest track wins; disagreeing tracks are flagged, not rejected."""
    parts: dict[str, int] = {}
    if ink_duration_ms is not None:
        parts["ink"] = ink_duration_ms
    if audio is not None:
        parts["audio"] = audio.duration_ms
    if video_duration_ms is not None:
        parts["video"] = video_duration_ms
    if declared_duration_ms is not None:
        parts["declared"] = declared_duration_ms
    if not parts:
        return 0, []
    duration = max(parts.values())
    warnings = []
    if duration - min(parts.values()) >= DURATION_MISMATCH_MS:
        listing = ", ".join(f"{k}={v} ms" for k, v in parts.items())
        warnings.append(f"track durations disagree by 1 s or more: {listing}")
    return duration, warnings


def response_labels(
    mode: InputMode, ink_stream: InkStream | None, audio_track: AudioTrack | None
) -> list[str]:
    """Derived labels, always respecting the exercise's mode gating."""
    labels = []
    if audio_track is not None and captures_audio(mode) and detect_silence(audio_track).silent:
        labels.append(LABEL_NO_AUDIO)
    if ink_enabled(mode) and (ink_stream is None or not has_ink(ink_stream)):
        labels.append(LABEL_NO_INK)
    return labels


def make_thumbnail(
    store: Store,
    spec: ExerciseSpec,
    ink_stream: InkStream | None,
    poster_ref: BlobRef | None,
    width: int = THUMBNAIL_W,
    height: int = THUMBNAIL_H,
) -> BlobRef:
    """Render and persist the card thumbnail.

    Priority: final ink frame (over the exercise background when one exists),
    then the client-supplied video poster, then the audio placeholder glyph.
    """
    if ink_stream is not None:
        background = None
        if isinstance(spec.background, BlobRef):
            background = decode_image(store.read_blob(spec.background.hash), width, height)
        canvas = final_frame(ink_stream, width, height, background)
    elif poster_ref is not None:
        canvas = decode_image(store.read_blob(poster_ref.hash), width, height)
    else:
        canvas = audio_placeholder(width, height)
    return store.put_blob(encode_png(canvas), "png")


def _load_ref(body: dict, key: str) -> BlobRef | None:
    obj = body.get(key)
    return BlobRef.from_json(obj) if obj else None


def process_response(store: Store, response_id: str) -> dict:
    """Label and thumbnail one bundle; a no-op when nothing would change."""
    record = store.get("response", response_id)
    if record is None:
        raise NotFoundError("unknown-response", response_id)
    exercise = store.get("exercise", record.body["exercise_id"])
    if exercise is None:
        raise NotFoundError("unknown-exercise", record.body["exercise_id"])
    spec = ExerciseSpec.from_json(exercise.body["spec"])

    ink_ref = _load_ref(record.body, "ink_ref")
    audio_ref = _load_ref(record.body, "audio_ref")
    poster_ref = _load_ref(record.body, "poster_ref")
    try:
        ink_stream = parse_ink_stream(store.read_blob(ink_ref.hash)) if ink_ref else None
        audio_track = read_wav(store.read_blob(audio_ref.hash)) if audio_ref else None
    except (NotFoundError, ValidationError) as exc:
        raise StorageError("artifact-unreadable", f"{response_id}: {exc}") from exc

    labels = response_labels(spec.input_mode, ink_stream, audio_track)
    thumb = make_thumbnail(store, spec, ink_stream, poster_ref)

    body = dict(record.body)
    body["labels"] = labels
    body["thumbnail_ref"] = thumb.to_json()
    body["processed"] = True
    if body == record.body:
        return record.body
    store.commit(
        [RecordWrite("response", response_id, record.version, body)],
        require_blobs=[thumb.hash],
    )
    return body
