"""Synthetic student populations for filling galleries and load-testing submit.

plan_population is a pure function of (exercise spec, profile): given the same
seed it emits byte-identical artifacts, so tests can replay it independently
as ground truth for whatever the server ended up storing. run_simulation then
plays a plan against a backend with real concurrency.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .audio import AudioTrack, write_wav
from .backend import Backend
from .errors import ValidationError
from .ink import (
    InkEvent,
    InkStream,
    pen_down,
    pen_move,
    pen_up,
    serialize_ink_stream,
    set_style,
)
from .model import ExerciseSpec, captures_audio, ink_enabled, video_enabled
from .render import encode_png
from .sessions import Ratings, SubmissionParts

SAMPLE_RATE = 16000


@dataclass(frozen=True)
class SimProfile:
    n_students: int
    ink_prob: float = 0.8
    silence_prob: float = 0.2
    duration_range_ms: tuple[int, int] = (5000, 30000)
    seed: int = 0

    def __post_init__(self):
        if not (isinstance(self.n_students, int) and self.n_students > 0):
            raise ValidationError("bad-profile", "n_students must be a positive integer")
        for name in ("ink_prob", "silence_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValidationError("bad-profile", f"{name} must be in [0,1], got {p}")
        low, high = self.duration_range_ms
        if not (0 <= low <= high):
            raise ValidationError("bad-profile", f"bad duration range {self.duration_range_ms}")


@dataclass(frozen=True)
class StudentPlan:
    """Everything one synthetic student will upload, plus the ground truth
    the stored bundle must end up matching."""

    student_id: str
    display_name: str
    duration_ms: int
    parts: SubmissionParts
    declared_duration_ms: int | None
    ratings: Ratings
    has_real_ink: bool
    silent: bool
    expected_labels: tuple[str, ...]


def _rng_for(profile: SimProfile, index: int, exercise_id: str) -> np.random.Generator:
    # Exercise id folded in so the same cohort draws fresh content per
    # exercise; thread scheduling can never perturb any of it.
    ex_word = int(hashlib.sha256(exercise_id.encode()).hexdigest()[:8], 16)
    return np.random.default_rng([profile.seed, index, ex_word])


def _make_ink(rng: np.random.Generator, duration_ms: int, real: bool) -> InkStream:
    if not real:
        return InkStream((), duration_ms)
    events: list[InkEvent] = []
    t = 0
    n_strokes = int(rng.integers(1, 4))
    for _ in range(n_strokes):
        if rng.random() < 0.4:
            rgba = tuple(int(v) for v in rng.integers(0, 256, size=3)) + (255,)
            events.append(set_style(t, rgba, float(rng.uniform(0.004, 0.03))))
        x, y = rng.uniform(0.1, 0.9, size=2)
        events.append(pen_down(t, float(x), float(y)))
        for _ in range(int(rng.integers(4, 30))):
            t += int(rng.integers(5, 40))
            x = float(np.clip(x + rng.uniform(-0.05, 0.05), 0.0, 1.0))
            y = float(np.clip(y + rng.uniform(-0.05, 0.05), 0.0, 1.0))
            events.append(pen_move(t, x, y))
        t += int(rng.integers(5, 40))
        events.append(pen_up(t))
        t += int(rng.integers(20, 200))
    last = events[-1].t_ms
    if last > duration_ms:
        # Squeeze into the take so the declared length (≤ the limit) holds.
        events = [replace(e, t_ms=int(e.t_ms * duration_ms / last)) for e in events]
    return InkStream(tuple(events), duration_ms)


def _make_audio(rng: np.random.Generator, duration_ms: int, silent: bool) -> bytes:
    n = max(1, int(round(SAMPLE_RATE * duration_ms / 1000)))
    if silent:
        # Quiet mic hiss, well under the detection threshold.
        samples = np.clip(np.round(rng.normal(0.0, 2.0, size=n)), -32768, 32767).astype(np.int16)
    else:
        freq = float(rng.uniform(200.0, 800.0))
        tt = np.arange(n) / SAMPLE_RATE
        wave = 0.4 * np.sin(2 * np.pi * freq * tt) + rng.normal(0.0, 1e-4, size=n)
        samples = np.clip(np.round(wave * 32767), -32768, 32767).astype(np.int16)
    return write_wav(AudioTrack(samples, SAMPLE_RATE))


def _make_poster(rng: np.random.Generator) -> bytes:
    color = rng.integers(0, 256, size=3, dtype=np.uint8)
    return encode_png(np.broadcast_to(color, (48, 64, 3)).copy())


def plan_population(profile: SimProfile, spec: ExerciseSpec) -> list[StudentPlan]:
    plans = []
    limit_ms = spec.time_limit_s * 1000
    low, high = profile.duration_range_ms
    low = max(1000, low)
    high = max(low, high)
    for i in range(profile.n_students):
        rng = _rng_for(profile, i, spec.exercise_id)
        duration_ms = min(int(rng.integers(low, high + 1)), limit_ms)
        real_ink = bool(rng.random() < profile.ink_prob)
        silent = bool(rng.random() < profile.silence_prob)
        ratings = Ratings(int(rng.integers(1, 6)), int(rng.integers(1, 6)))

        ink_bytes = audio_bytes = video_bytes = poster_bytes = None
        declared = None
        if ink_enabled(spec.input_mode):
            stream = _make_ink(rng, duration_ms, real_ink)
            duration_ms = stream.duration_ms
            ink_bytes = serialize_ink_stream(stream)
        if captures_audio(spec.input_mode):
            audio_bytes = _make_audio(rng, duration_ms, silent)
        if video_enabled(spec.input_mode):
            video_bytes = rng.bytes(int(rng.integers(500, 4000)))
            declared = duration_ms
            if rng.random() < 0.5:
                poster_bytes = _make_poster(rng)

        labels = []
        if captures_audio(spec.input_mode) and silent:
            labels.append("no-audio")
        if ink_enabled(spec.input_mode) and not real_ink:
            labels.append("no-ink")

        plans.append(
            StudentPlan(
                student_id=f"sim{profile.seed}-{i:04d}",
                display_name=f"Sim Student {i + 1}",
                duration_ms=duration_ms,
                parts=SubmissionParts(
                    ink=ink_bytes, audio=audio_bytes, video=video_bytes, poster=poster_bytes
                ),
                declared_duration_ms=declared,
                ratings=ratings,
                has_real_ink=real_ink,
                silent=silent,
                expected_labels=tuple(labels),
            )
        )
    return plans


def run_simulation(
    backend: Backend, exercise_id: str, profile: SimProfile, parallelism: int = 8
) -> list[str]:
    """Submit a full plan concurrently; returns response ids in student order."""
    spec, _, _ = backend.lessons.exercise_context(exercise_id)
    plans = plan_population(profile, spec)
    for plan in plans:
        backend.register_user(plan.student_id, plan.display_name, "student")

    def submit_one(plan: StudentPlan) -> str:
        session, _ = backend.sessions.start(exercise_id, plan.student_id)
        bundle = backend.sessions.submit(
            session.session_id, plan.parts, plan.declared_duration_ms, plan.ratings
        )
        return bundle.response_id

    with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
        return list(pool.map(submit_one, plans))
