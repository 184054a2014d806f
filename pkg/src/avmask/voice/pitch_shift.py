"""Pitch shifting by waveform-similarity overlap-add plus resampling.

The clip is first time-stretched without changing pitch (overlap-add
where each new frame is picked from a small search region so it lines
up with the natural continuation of the previous one), then linearly
resampled back to the original duration, which scales pitch by the
requested ratio.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from avmask.errors import ParameterError
from avmask.media.wavio import AudioClip

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PitchShiftParams:
    ratio: float = 1.0
    window_ms: float = 25.0
    hop_ms: float = 12.5
    search_ms: float = 7.5

    def __post_init__(self):
        if not (0.5 <= self.ratio <= 2.0):
            raise ParameterError(f"ratio must be in [0.5, 2.0], got {self.ratio}")
        if self.hop_ms <= 0 or self.window_ms <= self.hop_ms:
            raise ParameterError(
                f"need window_ms > hop_ms > 0, got ({self.window_ms}, {self.hop_ms})"
            )
        if self.search_ms < 0:
            raise ParameterError(f"search_ms must be >= 0, got {self.search_ms}")


@dataclass
class PitchShiftResult:
    clip: AudioClip
    too_short: bool


def _cola_window(length: int) -> np.ndarray:
    # half-sample-shifted Hann: strictly positive, sums to 1 at 50% overlap
    n = np.arange(length)
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * (n + 0.5) / length)


def wsola_stretch(
    x: np.ndarray, tempo: float, window: int, hop: int, search: int
) -> np.ndarray:
    """Stretch x to length round(len(x)/tempo) without changing pitch.

    Synthesis frame k sits at k*hop in the output; its content is the
    input window starting within +-search of round(k*hop*tempo), clamped
    into the signal, that best correlates with the natural continuation
    of the previous frame (normalized cross-correlation; ties go to the
    candidate nearest that continuation).
    """
    n = len(x)
    target_len = int(round(n / tempo))
    if n < window:
        raise ParameterError(f"input of {n} samples is shorter than one window ({window})")
    w = _cola_window(window)
    # zero-pad so reference and candidate windows always exist near the
    # end; at tempo 1 the padded samples only ever land past target_len,
    # which keeps the identity case exact
    padded = np.concatenate([x, np.zeros(window + hop + search)])
    out = np.zeros(target_len + window)
    wsum = np.zeros(target_len + window)

    out[:window] += padded[:window] * w
    wsum[:window] += w
    prev_start = 0

    k = 1
    while k * hop < target_len:
        target = min(int(round(k * hop * tempo)), n - 1)
        natural = prev_start + hop
        lo = max(0, target - search)
        hi = min(target + search, n - 1)
        if hi > lo:
            ref = padded[natural : natural + window]
            segment = padded[lo : hi + window]
            candidates = np.lib.stride_tricks.sliding_window_view(segment, window)
            norms = np.linalg.norm(candidates, axis=1) * np.linalg.norm(ref)
            scores = np.where(norms > 0, candidates @ ref / np.where(norms > 0, norms, 1.0), 0.0)
            near_best = np.flatnonzero(scores >= scores.max() - 1e-12)
            offsets = lo + near_best
            best = int(offsets[np.argmin(np.abs(offsets - natural))])
        else:
            best = lo
        pos = k * hop
        out[pos : pos + window] += padded[best : best + window] * w
        wsum[pos : pos + window] += w
        prev_start = best
        k += 1

    covered = wsum > 1e-12
    out[covered] /= wsum[covered]
    return out[:target_len]


def resample_linear(y: np.ndarray, step: float) -> np.ndarray:
    """Read y at positions 0, step, 2*step, ... with linear interpolation."""
    if step <= 0:
        raise ParameterError(f"step must be positive, got {step}")
    if len(y) == 0:
        return y.copy()
    count = int(np.floor((len(y) - 1) / step)) + 1
    positions = np.arange(count) * step
    return np.interp(positions, np.arange(len(y)), y)


def shift_pitch_run(
    clip: AudioClip, params: PitchShiftParams = PitchShiftParams()
) -> PitchShiftResult:
    """Scale the clip's pitch by params.ratio, preserving duration.

    Clips shorter than one analysis window come back unchanged with the
    too_short flag set.
    """
    mono = clip.as_mono()
    sr = mono.sample_rate
    window = int(round(params.window_ms * sr / 1000.0))
    hop = int(round(params.hop_ms * sr / 1000.0))
    search = int(round(params.search_ms * sr / 1000.0))
    if len(mono.samples) < window:
        log.warning(
            "clip of %d samples is shorter than one window (%d); pitch shift skipped",
            len(mono.samples),
            window,
        )
        return PitchShiftResult(clip=mono, too_short=True)
    stretched = wsola_stretch(mono.samples, 1.0 / params.ratio, window, hop, search)
    shifted = resample_linear(stretched, params.ratio)
    out = AudioClip(sample_rate=sr, channels=1, samples=shifted)
    return PitchShiftResult(clip=out, too_short=False)


def shift_pitch(clip: AudioClip, params: PitchShiftParams = PitchShiftParams()) -> AudioClip:
    return shift_pitch_run(clip, params).clip
