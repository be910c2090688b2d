"""Silence detection and WAV plumbing.

The analytic anchor: a sine of amplitude A has RMS A/sqrt(2), so a
full-scale-half sine (A = 0.5) measures 20*log10(0.5/sqrt(2)) = -9.0309 dBFS.
"""

from __future__ import annotations

import io
import math
import wave

import numpy as np
import pytest

from lecturekit.audio import (
    ALLOWED_RATES,
    SILENCE_THRESHOLD_DBFS,
    AudioTrack,
    detect_silence,
    read_wav,
    write_wav,
)
from lecturekit.errors import ValidationError


def sine_track(amplitude: float, duration_ms: int = 10_000, rate: int = 44100, freq: float = 440.0) -> AudioTrack:
    n = int(rate * duration_ms / 1000)
    t = np.arange(n) / rate
    samples = np.clip(np.round(amplitude * 32768 * np.sin(2 * np.pi * freq * t)), -32768, 32767)
    return AudioTrack(samples.astype(np.int16), rate)


def test_all_zero_track_is_silent():
    track = AudioTrack(np.zeros(44100 * 10, dtype=np.int16), 44100)
    report = detect_silence(track)
    assert report.silent
    assert report.max_window_dbfs == float("-inf")


def test_sine_half_scale_matches_analytic_rms():
    report = detect_silence(sine_track(0.5))
    analytic = 20 * math.log10(0.5 / math.sqrt(2))
    assert not report.silent
    assert abs(report.max_window_dbfs - analytic) <= 0.5
    assert abs(analytic - -9.0309) < 0.001  # the anchor itself


def test_faint_noise_is_silent():
    rng = np.random.default_rng(1)
    # std 3 LSB -> approx -80 dBFS, far below the -50 threshold
    samples = np.clip(np.round(rng.normal(0, 3.0, size=44100)), -32768, 32767).astype(np.int16)
    report = detect_silence(AudioTrack(samples, 44100))
    assert report.silent
    assert report.max_window_dbfs < -70


def test_threshold_is_strict_less_than():
    # DC level has RMS equal to its magnitude; 104/32768 is just over -50 dBFS,
    # 103/32768 just under.
    over = AudioTrack(np.full(16000, 104, dtype=np.int16), 16000)
    under = AudioTrack(np.full(16000, 103, dtype=np.int16), 16000)
    assert not detect_silence(over).silent
    assert detect_silence(under).silent


def test_single_loud_window_defeats_silence():
    rate = 16000
    samples = np.zeros(rate, dtype=np.int16)  # 1 s of zeros
    burst = sine_track(0.5, duration_ms=100, rate=rate).samples
    samples = np.concatenate([samples, burst])  # loudness only in the tail
    report = detect_silence(AudioTrack(samples, rate))
    assert not report.silent


def test_partial_tail_window_counts():
    rate = 16000
    quiet = np.zeros(int(rate * 0.30), dtype=np.int16)
    tail = np.full(int(rate * 0.05), 8000, dtype=np.int16)  # 50 ms partial window
    report = detect_silence(AudioTrack(np.concatenate([quiet, tail]), rate))
    assert not report.silent


def test_empty_track_is_silent():
    report = detect_silence(AudioTrack(np.zeros(0, dtype=np.int16), 16000))
    assert report.silent and report.max_window_dbfs == float("-inf")


def test_attenuation_never_unsilences():
    rng = np.random.default_rng(8)
    for _ in range(20):
        samples = rng.integers(-32768, 32767, size=int(rng.integers(1, 5000)), dtype=np.int16)
        track = AudioTrack(samples, 16000)
        halved = AudioTrack((samples // 2).astype(np.int16), 16000)
        if detect_silence(track).silent:
            assert detect_silence(halved).silent


def test_duration_ms_rounding():
    assert AudioTrack(np.zeros(16000, dtype=np.int16), 16000).duration_ms == 1000
    assert AudioTrack(np.zeros(8000, dtype=np.int16), 16000).duration_ms == 500
    assert AudioTrack(np.zeros(1, dtype=np.int16), 48000).duration_ms == 0


# -- WAV container -------------------------------------------------------------


def test_wav_round_trip():
    track = sine_track(0.3, duration_ms=500, rate=16000)
    again = read_wav(write_wav(track))
    assert again.sample_rate_hz == 16000
    assert np.array_equal(again.samples, track.samples)


@pytest.mark.parametrize("rate", ALLOWED_RATES)
def test_all_allowed_rates(rate):
    track = AudioTrack(np.zeros(rate // 10, dtype=np.int16), rate)
    assert read_wav(write_wav(track)).sample_rate_hz == rate


def test_unsupported_rate_rejected():
    with pytest.raises(ValidationError) as err:
        AudioTrack(np.zeros(10, dtype=np.int16), 22050)
    assert err.value.code == "unsupported-rate"

    buf = io.BytesIO()
    with wave.open(buf, "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(22050)
        w.writeframes(b"\x00\x00" * 10)
    with pytest.raises(ValidationError) as err:
        read_wav(buf.getvalue())
    assert err.value.code == "unsupported-rate"


def test_stereo_rejected():
    buf = io.BytesIO()
    with wave.open(buf, "wb") as w:
        w.setnchannels(2)
        w.setsampwidth(2)
        w.setframerate(16000)
        w.writeframes(b"\x00\x00\x00\x00" * 10)
    with pytest.raises(ValidationError) as err:
        read_wav(buf.getvalue())
    assert err.value.code == "malformed-artifact"


def test_eight_bit_rejected():
    buf = io.BytesIO()
    with wave.open(buf, "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(1)
        w.setframerate(16000)
        w.writeframes(b"\x00" * 10)
    with pytest.raises(ValidationError) as err:
        read_wav(buf.getvalue())
    assert err.value.code == "malformed-artifact"


def test_garbage_bytes_rejected():
    with pytest.raises(ValidationError) as err:
        read_wav(b"RIFFgarbage that is not wav")
    assert err.value.code == "malformed-artifact"


def test_threshold_constant():
    assert SILENCE_THRESHOLD_DBFS == -50.0
