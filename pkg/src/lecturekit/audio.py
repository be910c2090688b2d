"""Audio tracks and silence detection.

Responses carry audio as linear PCM, signed 16-bit mono WAV. Silence is
decided by RMS level over non-overlapping 100 ms windows in dBFS (0 dBFS =
full scale, i.e. sample value 32768): a track is silent iff every window
stays below -50 dBFS. Conservative on purpose — one spoken word in a single
window defeats the label.
"""

from __future__ import annotations

import io
import wave
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

ALLOWED_RATES = (8000, 16000, 44100, 48000)
SILENCE_THRESHOLD_DBFS = -50.0
WINDOW_MS = 100
FULL_SCALE = 32768.0


@dataclass(frozen=True)
class AudioTrack:
    samples: np.ndarray  # int16, 1-D
    sample_rate_hz: int

    def __post_init__(self):
        if self.sample_rate_hz not in ALLOWED_RATES:
            raise ValidationError(
                "unsupported-rate", f"rate {self.sample_rate_hz} not in {ALLOWED_RATES}"
            )
        arr = np.asarray(self.samples, dtype=np.int16)
        object.__setattr__(self, "samples", arr)

    @property
    def duration_ms(self) -> int:
        return round(len(self.samples) * 1000 / self.sample_rate_hz)


@dataclass(frozen=True)
class SilenceReport:
    silent: bool
    max_window_dbfs: float


def read_wav(data: bytes) -> AudioTrack:
    """Parse a RIFF WAV; only PCM 16-bit mono at the allowed rates is accepted."""
    try:
        with wave.open(io.BytesIO(data)) as wf:
            channels = wf.getnchannels()
            width = wf.getsampwidth()
            rate = wf.getframerate()
            comp = wf.getcomptype()
            frames = wf.readframes(wf.getnframes())
    except (wave.Error, EOFError) as exc:
        raise ValidationError("malformed-artifact", f"not a WAV file: {exc}") from None
    if comp != "NONE" or width != 2 or channels != 1:
        raise ValidationError(
            "malformed-artifact",
            f"need PCM 16-bit mono, got comp={comp} width={width} channels={channels}",
        )
    if rate not in ALLOWED_RATES:
        raise ValidationError("unsupported-rate", f"rate {rate} not in {ALLOWED_RATES}")
    samples = np.frombuffer(frames, dtype="<i2").astype(np.int16)
    return AudioTrack(samples, rate)


def write_wav(track: AudioTrack) -> bytes:
    buf = io.BytesIO()
    with wave.open(buf, "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(track.sample_rate_hz)
        wf.writeframes(track.samples.astype("<i2").tobytes())
    return buf.getvalue()


def detect_silence(track: AudioTrack) -> SilenceReport:
    """Windowed RMS silence check.

    A trailing partial window still counts (so a click in the last few
    samples defeats the label). The empty track is silent at -inf dBFS.
    Monotone under gain: amplifying samples never turns a loud track silent.
    """
    samples = track.samples
    if len(samples) == 0:
        return SilenceReport(True, float("-inf"))
    window = track.sample_rate_hz * WINDOW_MS // 1000
    normalized = samples.astype(np.float64) / FULL_SCALE
    max_dbfs = float("-inf")
    for start in range(0, len(normalized), window):
        chunk = normalized[start : start + window]
        rms = float(np.sqrt(np.mean(chunk * chunk)))
        dbfs = 20.0 * np.log10(rms) if rms > 0.0 else float("-inf")
        max_dbfs = max(max_dbfs, dbfs)
    return SilenceReport(silent=max_dbfs < SILENCE_THRESHOLD_DBFS, max_window_dbfs=max_dbfs)
