"""Shared synthetic corpus builders.

Everything is seeded; the moving-box footage uses a bright box on a
flat gray background so background subtraction recovers the exact
foreground and blackout leakage has no excuse to be nonzero.
"""

from __future__ import annotations

import numpy as np
import pytest

from avmask.detection import DetectionTimeline, bgsub_detect
from avmask.media.rvf import VideoHeader, arrays_to_frames, write_rvf_file
from avmask.media.wavio import AudioClip, write_wav_file

BACKGROUND = (40, 40, 40)
BOX_COLOR = (200, 60, 60)


def moving_box_frames(seed: int, width: int = 48, height: int = 36, count: int = 20):
    """Frames with one bright box wandering over a flat background."""
    rng = np.random.default_rng(seed)
    box_w = int(rng.integers(6, 12))
    box_h = int(rng.integers(5, 10))
    x = int(rng.integers(0, width - box_w))
    y = int(rng.integers(0, height - box_h))
    frames = []
    for _ in range(count):
        frame = np.full((height, width, 3), BACKGROUND, dtype=np.uint8)
        frame[y : y + box_h, x : x + box_w] = BOX_COLOR
        frames.append(frame)
        x = int(np.clip(x + rng.integers(-3, 4), 0, width - box_w))
        y = int(np.clip(y + rng.integers(-3, 4), 0, height - box_h))
    return frames


def bgsub_timeline(frames, fps=(25, 1)) -> DetectionTimeline:
    height, width = frames[0].shape[:2]
    background = np.full((height, width, 3), BACKGROUND, dtype=np.uint8)
    return DetectionTimeline(
        width=width,
        height=height,
        fps=fps,
        frames=[
            (i, bgsub_detect(background, frame, tau=30, min_area=4))
            for i, frame in enumerate(frames)
        ],
    )


def random_frames(seed: int, width: int = 32, height: int = 24, count: int = 10):
    rng = np.random.default_rng(seed)
    return [
        rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)
        for _ in range(count)
    ]


def write_video(path, frames, fps=(25, 1)) -> VideoHeader:
    height, width = frames[0].shape[:2]
    header = VideoHeader(width, height, len(frames), fps[0], fps[1])
    write_rvf_file(path, header, arrays_to_frames(frames))
    return header


def sine_clip(freq: float, seconds: float = 1.0, sr: int = 16000, amp: float = 0.3) -> AudioClip:
    t = np.arange(int(seconds * sr)) / sr
    return AudioClip(sr, 1, amp * np.sin(2.0 * np.pi * freq * t))


def speech_like_clip(seed: int, seconds: float = 3.0, sr: int = 16000) -> AudioClip:
    """Pulse train through a few damped resonators, like a crude vowel."""
    rng = np.random.default_rng(seed)
    n = int(seconds * sr)
    f0 = 110.0
    excitation = np.zeros(n)
    period = int(sr / f0)
    excitation[::period] = 1.0
    excitation += 0.01 * rng.standard_normal(n)
    signal = np.zeros(n)
    for freq, bandwidth in ((500.0, 80.0), (1500.0, 120.0), (2500.0, 160.0)):
        r = np.exp(-np.pi * bandwidth / sr)
        theta = 2.0 * np.pi * freq / sr
        a1, a2 = 2.0 * r * np.cos(theta), -r * r
        y = np.zeros(n)
        y1 = y2 = 0.0
        for i in range(n):
            y[i] = excitation[i] + a1 * y1 + a2 * y2
            y2, y1 = y1, y[i]
        signal += y
    signal = 0.3 * signal / np.max(np.abs(signal))
    return AudioClip(sr, 1, signal)


def snr_db(reference: np.ndarray, test: np.ndarray) -> float:
    reference = np.asarray(reference, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    noise = reference - test
    power = float(np.sum(reference**2))
    noise_power = float(np.sum(noise**2))
    if noise_power == 0.0:
        return float("inf")
    return 10.0 * np.log10(power / noise_power)


def dominant_frequency(samples: np.ndarray, sr: int) -> float:
    spectrum = np.abs(np.fft.rfft(samples))
    spectrum[0] = 0.0
    return float(np.fft.rfftfreq(len(samples), d=1.0 / sr)[int(np.argmax(spectrum))])


@pytest.fixture
def box_video(tmp_path):
    frames = moving_box_frames(seed=1)
    header = write_video(tmp_path / "box.rvf", frames)
    return tmp_path / "box.rvf", header, frames


@pytest.fixture
def tone_wav(tmp_path):
    clip = sine_clip(220.0, seconds=2.0)
    write_wav_file(tmp_path / "tone.wav", clip)
    return tmp_path / "tone.wav", clip
