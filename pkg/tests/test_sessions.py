"""Recording sessions: start, discard/re-record, and the atomic submit path."""

from __future__ import annotations

import threading
import time
from concurrent.futures import ThreadPoolExecutor

import pytest
from conftest import ink_doc, silent_wav_bytes, sine_wav_bytes

from lecturekit.errors import ConflictError, NotFoundError, ValidationError
from lecturekit.render import encode_png
from lecturekit.sessions import Ratings, SubmissionParts, parse_ratings

RATINGS = {"confidence": 4, "helpfulness": 3}


def drawing(duration_ms: int = 3000, x0: float = 0.1) -> bytes:
    return ink_doc(
        duration_ms,
        [
            {"t": 0, "k": "d", "x": x0, "y": 0.2},
            {"t": 40, "k": "m", "x": x0 + 0.3, "y": 0.7},
            {"t": 80, "k": "u"},
        ],
    )


def poster_bytes() -> bytes:
    import numpy as np

    return encode_png(np.full((48, 64, 3), 120, np.uint8))


def blob_files(store) -> list[str]:
    return sorted(
        p.name
        for sub in store._blob_dir.iterdir()
        if sub.name != "tmp" and sub.is_dir()
        for p in sub.iterdir()
    )


# ------------------------------------------------------------------------------
# ratings
# ------------------------------------------------------------------------------


def test_parse_ratings_ok():
    assert parse_ratings({"confidence": 1, "helpfulness": 5}) == Ratings(1, 5)


@pytest.mark.parametrize(
    "obj",
    [
        None,
        [],
        {},
        {"confidence": 3},
        {"confidence": 0, "helpfulness": 3},
        {"confidence": 6, "helpfulness": 3},
        {"confidence": 3, "helpfulness": "4"},
        {"confidence": 3, "helpfulness": 4.0},
        {"confidence": True, "helpfulness": 4},
    ],
)
def test_parse_ratings_rejects(obj):
    with pytest.raises(ValidationError) as err:
        parse_ratings(obj)
    assert err.value.code == "invalid-rating"


# ------------------------------------------------------------------------------
# session lifecycle
# ------------------------------------------------------------------------------


def test_start_returns_open_session_and_preview(published):
    backend, _, exercises = published
    session, preview = backend.sessions.start(exercises["ink+audio"], "stu-1")
    assert session.state == "open"
    assert session.exercise_id == exercises["ink+audio"]
    assert (preview.canvas, preview.microphone, preview.camera) == (True, True, False)
    assert backend.sessions.get(session.session_id) == session


def test_start_unknown_exercise(published):
    backend, _, _ = published
    with pytest.raises(NotFoundError) as err:
        backend.sessions.start("ex-99999999", "stu-1")
    assert err.value.code == "unknown-exercise"


def test_start_on_unpublished_lesson(backend):
    backend.register_user("t2", "T", "teacher")
    lesson = backend.lessons.create("Draft", "t2")
    _, ex = backend.lessons.add_exercise_segment(
        lesson.lesson_id, {"instructions": "x", "time_limit_s": 30, "input_mode": "ink"}
    )
    with pytest.raises(ValidationError) as err:
        backend.sessions.start(ex, "stu-1")
    assert err.value.code == "lesson-unpublished"


def test_get_unknown_session(published):
    backend, _, _ = published
    with pytest.raises(NotFoundError) as err:
        backend.sessions.get("nope")
    assert err.value.code == "unknown-session"


def test_discard_chain_then_submit(published):
    backend, _, exercises = published
    before = blob_files(backend.store)
    session, _ = backend.sessions.start(exercises["ink"], "stu-1")
    chain = [session]
    for _ in range(5):
        chain.append(backend.sessions.discard_and_rerecord(chain[-1].session_id))
    # every predecessor is terminal, only the tail is open
    for old in chain[:-1]:
        assert backend.sessions.get(old.session_id).state == "discarded"
        with pytest.raises(ConflictError) as err:
            backend.sessions.discard_and_rerecord(old.session_id)
        assert err.value.code == "session-terminal"
    assert backend.sessions.get(chain[-1].session_id).state == "open"
    # discarded takes never stored any artifact bytes
    assert blob_files(backend.store) == before

    bundle = backend.sessions.submit(chain[-1].session_id, SubmissionParts(ink=drawing()), None, RATINGS)
    assert bundle.processed
    assert backend.sessions.get(chain[-1].session_id).state == "submitted"


def test_rerecord_preserves_identity(published):
    backend, _, exercises = published
    session, _ = backend.sessions.start(exercises["audio"], "stu-7")
    fresh = backend.sessions.discard_and_rerecord(session.session_id)
    assert fresh.session_id != session.session_id
    assert (fresh.exercise_id, fresh.student_id) == (session.exercise_id, "stu-7")


# ------------------------------------------------------------------------------
# submit: validation failures
# ------------------------------------------------------------------------------


def open_session(published, mode="ink", student="stu-1"):
    backend, _, exercises = published
    session, _ = backend.sessions.start(exercises[mode], student)
    return backend, session


def test_submit_requires_some_artifact(published):
    backend, session = open_session(published)
    with pytest.raises(ValidationError) as err:
        backend.sessions.submit(session.session_id, SubmissionParts(), None, RATINGS)
    assert err.value.code == "malformed-artifact"
    assert "no recorded artifacts" in err.value.detail


def test_submit_bad_ink_wrapped(published):
    backend, session = open_session(published)
    with pytest.raises(ValidationError) as err:
        backend.sessions.submit(session.session_id, SubmissionParts(ink=b"{nope"), None, RATINGS)
    assert err.value.code == "malformed-artifact"
    assert err.value.detail.startswith("ink:")


def test_submit_bad_audio_wrapped(published):
    backend, session = open_session(published, mode="audio")
    with pytest.raises(ValidationError) as err:
        backend.sessions.submit(session.session_id, SubmissionParts(audio=b"RIFFjunk"), None, RATINGS)
    assert err.value.code == "malformed-artifact"
    assert err.value.detail.startswith("audio:")


def test_submit_video_requires_declared_duration(published):
    backend, session = open_session(published, mode="video")
    with pytest.raises(ValidationError) as err:
        backend.sessions.submit(
            session.session_id,
            SubmissionParts(video=b"vid", audio=sine_wav_bytes()),
            None,
            RATINGS,
        )
    assert err.value.code == "malformed-artifact"
    assert "duration" in err.value.detail


def test_submit_video_requires_companion_audio(published):
    backend, session = open_session(published, mode="video")
    with pytest.raises(ValidationError) as err:
        backend.sessions.submit(session.session_id, SubmissionParts(video=b"vid"), 2000, RATINGS)
    assert err.value.code == "malformed-artifact"
    assert "audio" in err.value.detail


def test_submit_empty_video_part(published):
    backend, session = open_session(published, mode="video")
    with pytest.raises(ValidationError) as err:
        backend.sessions.submit(
            session.session_id, SubmissionParts(video=b"", audio=sine_wav_bytes()), 2000, RATINGS
        )
    assert err.value.code == "malformed-artifact"


def test_submit_garbage_poster(published):
    backend, session = open_session(published, mode="video")
    with pytest.raises(ValidationError) as err:
        backend.sessions.submit(
            session.session_id,
            SubmissionParts(video=b"vid", audio=sine_wav_bytes(), poster=b"GIF89a nope"),
            2000,
            RATINGS,
        )
    assert err.value.code == "malformed-artifact"
    assert "poster" in err.value.detail


@pytest.mark.parametrize("declared", [-1, 1.5, True, "2000"])
def test_submit_bad_declared_duration(published, declared):
    backend, session = open_session(published)
    with pytest.raises(ValidationError) as err:
        backend.sessions.submit(session.session_id, SubmissionParts(ink=drawing()), declared, RATINGS)
    assert err.value.code == "malformed-artifact"


def test_submit_invalid_ratings(published):
    backend, session = open_session(published)
    with pytest.raises(ValidationError) as err:
        backend.sessions.submit(
            session.session_id, SubmissionParts(ink=drawing()), None, {"confidence": 9, "helpfulness": 1}
        )
    assert err.value.code == "invalid-rating"
    # the failed submit left the session open
    assert backend.sessions.get(session.session_id).state == "open"


MODE_MISMATCHES = [
    ("audio", SubmissionParts(ink=drawing(), audio=sine_wav_bytes())),
    ("ink", SubmissionParts(ink=drawing(), audio=sine_wav_bytes())),
    ("ink+audio", SubmissionParts(video=b"v", audio=sine_wav_bytes())),
    ("ink", SubmissionParts(ink=drawing(), poster=poster_bytes())),
    ("video", SubmissionParts(ink=drawing(), video=b"v", audio=sine_wav_bytes())),
]


@pytest.mark.parametrize("mode,parts", MODE_MISMATCHES)
def test_submit_mode_mismatch(published, mode, parts):
    backend, session = open_session(published, mode=mode)
    declared = 2000 if parts.video is not None else None
    with pytest.raises(ValidationError) as err:
        backend.sessions.submit(session.session_id, parts, declared, RATINGS)
    assert err.value.code == "mode-mismatch"


# ------------------------------------------------------------------------------
# submit: the time-limit boundary (45 s exercise + 2 s grace)
# ------------------------------------------------------------------------------


def test_limit_accepts_exactly_at_grace_edge(published):
    backend, session = open_session(published)
    bundle = backend.sessions.submit(
        session.session_id, SubmissionParts(ink=ink_doc(47_000, [])), None, RATINGS
    )
    assert bundle.duration_ms == 47_000


def test_limit_rejects_one_ms_past_grace(published):
    backend, session = open_session(published)
    with pytest.raises(ValidationError) as err:
        backend.sessions.submit(
            session.session_id, SubmissionParts(ink=ink_doc(47_001, [])), None, RATINGS
        )
    assert err.value.code == "over-limit"
    assert backend.sessions.get(session.session_id).state == "open"


def test_limit_considers_longest_track(published):
    backend, session = open_session(published, mode="ink+audio")
    with pytest.raises(ValidationError) as err:
        backend.sessions.submit(
            session.session_id,
            SubmissionParts(ink=ink_doc(1000, []), audio=sine_wav_bytes(duration_ms=48_000)),
            None,
            RATINGS,
        )
    assert err.value.code == "over-limit"


# ------------------------------------------------------------------------------
# submit: happy paths
# ------------------------------------------------------------------------------


def test_submit_ink_bundle_processed(published):
    backend, session = open_session(published)
    bundle = backend.sessions.submit(session.session_id, SubmissionParts(ink=drawing()), None, RATINGS)
    assert bundle.response_id.startswith("resp-")
    assert bundle.ink_ref is not None and bundle.audio_ref is None
    assert bundle.processed and bundle.thumbnail_ref is not None
    assert bundle.labels == ()  # real drawing
    assert bundle.ratings == Ratings(4, 3)
    assert backend.store.read_blob(bundle.thumbnail_ref.hash)[:4] == b"\x89PNG"


def test_submit_video_bundle_all_refs(published):
    backend, session = open_session(published, mode="video", student="stu-2")
    bundle = backend.sessions.submit(
        session.session_id,
        SubmissionParts(video=b"container bytes", audio=sine_wav_bytes(), poster=poster_bytes()),
        2000,
        RATINGS,
    )
    assert bundle.video_ref is not None and bundle.poster_ref is not None
    assert bundle.audio_ref is not None and bundle.ink_ref is None
    assert bundle.duration_ms == 2000


def test_submit_records_display_name(published):
    backend, _, exercises = published
    backend.register_user("stu-9", "Grace Hopper", "student")
    session, _ = backend.sessions.start(exercises["ink"], "stu-9")
    bundle = backend.sessions.submit(session.session_id, SubmissionParts(ink=drawing()), None, RATINGS)
    assert bundle.student_name == "Grace Hopper"


def test_submit_divergent_tracks_warn_but_land(published):
    backend, session = open_session(published, mode="ink+audio")
    bundle = backend.sessions.submit(
        session.session_id,
        SubmissionParts(ink=ink_doc(30_000, []), audio=sine_wav_bytes(duration_ms=31_000)),
        None,
        RATINGS,
    )
    assert bundle.duration_ms == 31_000
    assert len(bundle.consistency_warnings) == 1


def test_canonical_ink_dedupes_across_students(published):
    backend, _, exercises = published
    doc_compact = drawing()
    doc_spaced = doc_compact.replace(b",", b" , ").replace(b":", b" : ")
    assert doc_compact != doc_spaced
    s1, _ = backend.sessions.start(exercises["ink"], "a")
    s2, _ = backend.sessions.start(exercises["ink"], "b")
    b1 = backend.sessions.submit(s1.session_id, SubmissionParts(ink=doc_compact), None, RATINGS)
    b2 = backend.sessions.submit(s2.session_id, SubmissionParts(ink=doc_spaced), None, RATINGS)
    assert b1.ink_ref.hash == b2.ink_ref.hash  # same drawing, one blob


def test_deferred_processing(published):
    backend, _, exercises = published
    backend.sessions.auto_process = False
    session, _ = backend.sessions.start(exercises["ink"], "stu-1")
    bundle = backend.sessions.submit(session.session_id, SubmissionParts(ink=ink_doc(100, [])), None, RATINGS)
    assert not bundle.processed and bundle.thumbnail_ref is None
    assert backend.sessions.process_pending() == 1
    again = backend.sessions.response(bundle.response_id)
    assert again.processed and again.labels == ("no-ink",)
    assert backend.sessions.process_pending() == 0


# ------------------------------------------------------------------------------
# submit: terminal states, duplicates, races
# ------------------------------------------------------------------------------


def test_submit_twice_on_same_session(published):
    backend, session = open_session(published)
    backend.sessions.submit(session.session_id, SubmissionParts(ink=drawing()), None, RATINGS)
    with pytest.raises(ConflictError) as err:
        backend.sessions.submit(session.session_id, SubmissionParts(ink=drawing()), None, RATINGS)
    assert err.value.code == "session-terminal"


def test_submit_on_discarded_session(published):
    backend, session = open_session(published)
    backend.sessions.discard_and_rerecord(session.session_id)
    with pytest.raises(ConflictError) as err:
        backend.sessions.submit(session.session_id, SubmissionParts(ink=drawing()), None, RATINGS)
    assert err.value.code == "session-terminal"


def test_second_session_duplicate_submission(published):
    backend, _, exercises = published
    s1, _ = backend.sessions.start(exercises["ink"], "stu-1")
    s2, _ = backend.sessions.start(exercises["ink"], "stu-1")
    backend.sessions.submit(s1.session_id, SubmissionParts(ink=drawing()), None, RATINGS)
    with pytest.raises(ConflictError) as err:
        backend.sessions.submit(s2.session_id, SubmissionParts(ink=drawing(x0=0.4)), None, RATINGS)
    assert err.value.code == "duplicate-submission"
    # loser session remains open (its commit never landed)
    assert backend.sessions.get(s2.session_id).state == "open"


def test_same_student_same_exercise_race(published):
    backend, _, exercises = published
    n = 8
    sessions = [backend.sessions.start(exercises["ink"], "racer")[0] for _ in range(n)]
    barrier = threading.Barrier(n)
    outcomes: list[str] = []

    def go(i: int):
        barrier.wait()
        try:
            backend.sessions.submit(
                sessions[i].session_id, SubmissionParts(ink=drawing(x0=0.05 + i * 0.05)), None, RATINGS
            )
            return "won"
        except ConflictError as exc:
            return exc.code

    with ThreadPoolExecutor(max_workers=n) as pool:
        outcomes = list(pool.map(go, range(n)))
    assert outcomes.count("won") == 1
    assert outcomes.count("duplicate-submission") == n - 1
    mine = [b for b in backend.sessions.responses_for_exercise(exercises["ink"]) if b.student_id == "racer"]
    assert len(mine) == 1


def test_loser_blobs_are_collectable_orphans(published):
    backend, _, exercises = published
    s1, _ = backend.sessions.start(exercises["ink"], "stu-1")
    s2, _ = backend.sessions.start(exercises["ink"], "stu-1")
    winner = backend.sessions.submit(s1.session_id, SubmissionParts(ink=drawing(x0=0.1)), None, RATINGS)
    with pytest.raises(ConflictError):
        backend.sessions.submit(s2.session_id, SubmissionParts(ink=drawing(x0=0.6)), None, RATINGS)
    removed = backend.store.gc_orphans(window_s=0, now=time.time() + 60)
    assert removed >= 1  # at least the loser's ink blob
    assert backend.store.has_blob(winner.ink_ref.hash)
    assert backend.store.has_blob(winner.thumbnail_ref.hash)


def test_distinct_students_race_all_land(published):
    backend, _, exercises = published
    n = 16
    sessions = [backend.sessions.start(exercises["ink"], f"s{i:02d}")[0] for i in range(n)]
    barrier = threading.Barrier(n)

    def go(i: int):
        barrier.wait()
        return backend.sessions.submit(
            sessions[i].session_id, SubmissionParts(ink=drawing(x0=0.03 * i)), None, RATINGS
        )

    with ThreadPoolExecutor(max_workers=n) as pool:
        bundles = list(pool.map(go, range(n)))
    ids = {b.response_id for b in bundles}
    assert len(ids) == n
    assert len(backend.sessions.responses_for_exercise(exercises["ink"])) == n


def test_response_lookup(published):
    backend, session = open_session(published)
    bundle = backend.sessions.submit(session.session_id, SubmissionParts(ink=drawing()), None, RATINGS)
    assert backend.sessions.response(bundle.response_id) == bundle
    with pytest.raises(NotFoundError) as err:
        backend.sessions.response("resp-00009999")
    assert err.value.code == "unknown-response"
