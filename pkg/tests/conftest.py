"""Shared fixtures and generators for the test suite."""

from __future__ import annotations

import json

import numpy as np
import pytest

from lecturekit.backend import Backend
from lecturekit.ink import InkStream, pen_down, pen_move, pen_up, set_style


@pytest.fixture
def backend(tmp_path):
    b = Backend(tmp_path / "data", fetch_url=lambda url: b"", fsync=False)
    yield b
    b.close()


@pytest.fixture
def published(backend):
    """One published lesson with one exercise per input mode.

    Returns (backend, lesson_id, {mode: exercise_id}).
    """
    backend.register_user("teach", "Prof. Ada", "teacher")
    lesson = backend.lessons.create("Lecture One", "teach")
    video = backend.store.put_blob(b"\x00fake video bytes\x00", "video")
    backend.lessons.add_video_segment(lesson.lesson_id, video, 30000)
    exercises = {}
    for mode in ("ink", "audio", "video", "ink+audio", "ink+video"):
        _, ex = backend.lessons.add_exercise_segment(
            lesson.lesson_id,
            {
                "instructions": f"Respond using {mode}",
                "time_limit_s": 45,
                "input_mode": mode,
                "student_gallery_access": True,
            },
        )
        exercises[mode] = ex
    backend.lessons.publish(lesson.lesson_id)
    return backend, lesson.lesson_id, exercises


def random_stream(rng: np.random.Generator, max_strokes: int = 4) -> InkStream:
    """A random *valid* stream: the generating walk obeys the pen state machine."""
    events = []
    t = 0
    for _ in range(int(rng.integers(0, max_strokes + 1))):
        if rng.random() < 0.5:
            rgba = tuple(int(v) for v in rng.integers(0, 256, size=4))
            events.append(set_style(t, rgba, float(rng.uniform(0.001, 0.1))))
            t += int(rng.integers(0, 30))
        events.append(pen_down(t, float(rng.uniform(0, 1)), float(rng.uniform(0, 1))))
        for _ in range(int(rng.integers(0, 12))):
            t += int(rng.integers(0, 25))  # zero steps: equal timestamps are legal
            events.append(pen_move(t, float(rng.uniform(0, 1)), float(rng.uniform(0, 1))))
        t += int(rng.integers(0, 25))
        events.append(pen_up(t))
        t += int(rng.integers(0, 40))
    duration = t + int(rng.integers(0, 1000))
    return InkStream(tuple(events), duration)


def ink_doc(duration_ms: int, events: list[dict]) -> bytes:
    return json.dumps(
        {"version": 1, "duration_ms": duration_ms, "events": events}
    ).encode()


def sine_wav_bytes(duration_ms: int = 2000, amplitude: float = 0.5, rate: int = 16000, freq: float = 440.0) -> bytes:
    from lecturekit.audio import AudioTrack, write_wav

    n = int(rate * duration_ms / 1000)
    t = np.arange(n) / rate
    samples = np.clip(np.round(amplitude * 32768 * np.sin(2 * np.pi * freq * t)), -32768, 32767)
    return write_wav(AudioTrack(samples.astype(np.int16), rate))


def silent_wav_bytes(duration_ms: int = 2000, rate: int = 16000) -> bytes:
    from lecturekit.audio import AudioTrack, write_wav

    n = int(rate * duration_ms / 1000)
    return write_wav(AudioTrack(np.zeros(n, dtype=np.int16), rate))
