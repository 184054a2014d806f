"""PCM16 WAV reading/writing with a normalized-float internal model.

Integer sample s maps to float s/32768 on read; floats are written as
round(clamp(f, -1, 1) * 32767) with round-half-up, so a round trip
changes any sample by at most 1/32767.
"""

from __future__ import annotations

import io
import wave
from dataclasses import dataclass

import numpy as np

from avmask.errors import ParameterError, UnsupportedFormatError


@dataclass
class AudioClip:
    """Interleaved normalized-float audio."""

    sample_rate: int
    channels: int
    samples: np.ndarray  # 1-D float64, interleaved by channel, values in [-1, 1]

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64).reshape(-1)
        if self.sample_rate <= 0:
            raise ParameterError(f"sample_rate must be positive, got {self.sample_rate}")
        if self.channels not in (1, 2):
            raise ParameterError(f"only 1 or 2 channels supported, got {self.channels}")
        if self.samples.size % self.channels != 0:
            raise ParameterError(
                f"sample count {self.samples.size} not divisible by channel count {self.channels}"
            )
        if self.samples.size and not np.all(np.isfinite(self.samples)):
            raise ParameterError("samples must be finite")

    @property
    def frame_count(self) -> int:
        return self.samples.size // self.channels

    @property
    def duration(self) -> float:
        return self.frame_count / self.sample_rate

    def as_mono(self) -> "AudioClip":
        """Downmix to mono by averaging channels; mono clips pass through."""
        if self.channels == 1:
            return self
        mixed = self.samples.reshape(-1, self.channels).mean(axis=1)
        return AudioClip(self.sample_rate, 1, mixed)


def read_wav(stream) -> AudioClip:
    """Read a RIFF/WAVE PCM16LE stream (1 or 2 channels)."""
    try:
        with wave.open(stream, "rb") as wf:
            channels = wf.getnchannels()
            sampwidth = wf.getsampwidth()
            comptype = wf.getcomptype()
            rate = wf.getframerate()
            nframes = wf.getnframes()
            if comptype != "NONE":
                raise UnsupportedFormatError(f"non-PCM codec {comptype!r} is not supported")
            if sampwidth != 2:
                raise UnsupportedFormatError(f"unsupported bit depth: {sampwidth * 8}-bit")
            if channels not in (1, 2):
                raise UnsupportedFormatError(f"unsupported channel count: {channels}")
            raw = wf.readframes(nframes)
    except wave.Error as exc:
        raise UnsupportedFormatError(f"not a readable PCM WAV stream: {exc}") from exc
    ints = np.frombuffer(raw, dtype="<i2")
    return AudioClip(rate, channels, ints.astype(np.float64) / 32768.0)


def write_wav(clip: AudioClip, stream) -> None:
    """Write the clip as PCM16LE, clamping floats to [-1, 1]."""
    clamped = np.clip(clip.samples, -1.0, 1.0)
    ints = np.floor(clamped * 32767.0 + 0.5).astype("<i2")
    with wave.open(stream, "wb") as wf:
        wf.setnchannels(clip.channels)
        wf.setsampwidth(2)
        wf.setframerate(clip.sample_rate)
        wf.writeframes(ints.tobytes())


def read_wav_file(path) -> AudioClip:
    with open(path, "rb") as fh:
        return read_wav(fh)


def write_wav_file(path, clip: AudioClip) -> None:
    with open(path, "wb") as fh:
        write_wav(clip, fh)


def wav_bytes(clip: AudioClip) -> bytes:
    buf = io.BytesIO()
    write_wav(clip, buf)
    return buf.getvalue()
