"""Autocorrelation pitch tracking and pitch-track correlation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from avmask.errors import ParameterError, UndefinedResultError
from avmask.media.wavio import AudioClip

F0_MIN = 50.0
F0_MAX = 500.0
VOICING_THRESHOLD = 0.5


@dataclass
class PitchTrack:
    """Fundamental-frequency estimates at a fixed hop.

    frames holds (f0, confidence) pairs; f0 is None on unvoiced frames.
    Voiced f0 values always land in [50, 500] Hz.
    """

    hop: float  # seconds
    frames: list[tuple[Optional[float], float]]

    def voiced_values(self) -> np.ndarray:
        return np.array([f0 for f0, _ in self.frames if f0 is not None])


def _frame_pitch(frame: np.ndarray, sample_rate: int) -> tuple[Optional[float], float]:
    x = frame - frame.mean()
    lag_min = int(np.floor(sample_rate / F0_MAX))
    lag_max = min(int(np.ceil(sample_rate / F0_MIN)), len(x) - 1)
    if lag_min < 1 or lag_max <= lag_min:
        return None, 0.0

    energy = float(np.dot(x, x))
    if energy <= 0.0:
        return None, 0.0

    lags = np.arange(lag_min, lag_max + 1)
    scores = np.zeros(len(lags))
    for i, lag in enumerate(lags):
        head = x[: len(x) - lag]
        tail = x[lag:]
        denom = np.sqrt(np.dot(head, head) * np.dot(tail, tail))
        if denom > 0:
            scores[i] = np.dot(head, tail) / denom
    peak = float(scores.max())
    confidence = float(np.clip(peak, 0.0, 1.0))
    if peak < VOICING_THRESHOLD:
        return None, confidence

    # a periodic frame correlates at every multiple of its period, so the
    # raw argmax may land on a subharmonic; take the shortest local peak
    # within tolerance of the global one
    local = np.zeros(len(scores), dtype=bool)
    if len(scores) >= 3:
        local[1:-1] = (scores[1:-1] >= scores[:-2]) & (scores[1:-1] >= scores[2:])
    local[0] = len(scores) == 1 or scores[0] >= scores[1]
    local[-1] = len(scores) == 1 or scores[-1] >= scores[-2]
    near = np.flatnonzero(local & (scores >= peak - 0.02))
    best = int(near[0]) if len(near) else int(np.argmax(scores))

    lag = float(lags[best])
    if 0 < best < len(lags) - 1:
        # parabolic refinement around the integer peak
        left, mid, right = scores[best - 1], scores[best], scores[best + 1]
        denom = left - 2.0 * mid + right
        if denom < 0:
            lag += 0.5 * (left - right) / denom
    f0 = float(np.clip(sample_rate / lag, F0_MIN, F0_MAX))
    return f0, confidence


def track_pitch(clip: AudioClip, window_ms: float = 40.0, hop_ms: float = 10.0) -> PitchTrack:
    """Track f0 over the clip; frames shorter than one window yield an
    empty track."""
    if clip.channels != 1:
        raise ParameterError("pitch tracking requires a mono clip")
    if clip.sample_rate < 8000:
        raise ParameterError(f"sample rate must be >= 8000 Hz, got {clip.sample_rate}")
    if window_ms <= 0 or hop_ms <= 0:
        raise ParameterError("window_ms and hop_ms must be positive")
    sr = clip.sample_rate
    window = int(round(window_ms * sr / 1000.0))
    hop = int(round(hop_ms * sr / 1000.0))
    x = clip.samples
    frames = []
    pos = 0
    while pos + window <= len(x):
        frames.append(_frame_pitch(x[pos : pos + window], sr))
        pos += hop
    return PitchTrack(hop=hop / sr, frames=frames)


def pitch_correlation(a: PitchTrack, b: PitchTrack) -> float:
    """Pearson correlation of f0 over frames voiced in both tracks."""
    if abs(a.hop - b.hop) > 1e-12:
        raise ParameterError(f"hop mismatch: {a.hop} vs {b.hop}")
    n = min(len(a.frames), len(b.frames))
    pairs = [
        (a.frames[i][0], b.frames[i][0])
        for i in range(n)
        if a.frames[i][0] is not None and b.frames[i][0] is not None
    ]
    if len(pairs) < 2:
        raise UndefinedResultError(
            f"need at least 2 frames voiced in both tracks, got {len(pairs)}"
        )
    xs = np.array([p[0] for p in pairs])
    ys = np.array([p[1] for p in pairs])
    sx = xs.std()
    sy = ys.std()
    if sx == 0.0 or sy == 0.0:
        raise UndefinedResultError("pitch variance is zero; correlation undefined")
    return float(np.corrcoef(xs, ys)[0, 1])
