"""Pipe bridge to an external transcoder for non-native containers.

The native path (RVF + WAV) never touches this module.  Anything else is
delegated: decoding pulls raw interleaved rgb24 frames out of the
transcoder over a pipe at probed dimensions, encoding pushes raw frames
(plus an optional WAV) back in and lets the transcoder do all codec and
muxing work.  The binary defaults to ffmpeg/ffprobe and can be pointed
elsewhere via MASK_TRANSCODER / MASK_PROBE or the ``binary`` argument.
"""

from __future__ import annotations

import json
import os
import shutil
import subprocess
from fractions import Fraction
from typing import Iterable, Iterator

from avmask.errors import TranscodeError, TranscoderMissingError
from avmask.media.rvf import MAGIC, FrameBuffer, VideoHeader


def transcoder_binary() -> str:
    return os.environ.get("MASK_TRANSCODER", "ffmpeg")


def probe_binary() -> str:
    return os.environ.get("MASK_PROBE", "ffprobe")


def transcoder_available(binary: str | None = None) -> bool:
    return shutil.which(binary or transcoder_binary()) is not None


def is_rvf(path) -> bool:
    """True when the file starts with the native magic."""
    try:
        with open(path, "rb") as fh:
            return fh.read(len(MAGIC)) == MAGIC
    except OSError:
        return False


def _require(binary: str) -> str:
    resolved = shutil.which(binary)
    if resolved is None:
        raise TranscoderMissingError(
            f"external transcoder {binary!r} not found on the executable search path"
        )
    return resolved


def probe_video(path, binary: str | None = None) -> VideoHeader:
    """Negotiate dimensions/rate/frame count with the probe tool."""
    exe = _require(binary or probe_binary())
    cmd = [
        exe, "-v", "error", "-select_streams", "v:0",
        "-count_frames",
        "-show_entries", "stream=width,height,r_frame_rate,nb_read_frames",
        "-of", "json", str(path),
    ]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        raise TranscodeError(f"probe failed for {path}: {proc.stderr.strip()[-500:]}")
    try:
        stream = json.loads(proc.stdout)["streams"][0]
        width = int(stream["width"])
        height = int(stream["height"])
        rate = Fraction(stream["r_frame_rate"])
        frame_count = int(stream["nb_read_frames"])
    except (KeyError, IndexError, ValueError) as exc:
        raise TranscodeError(f"unparseable probe output for {path}: {exc}") from exc
    return VideoHeader(width, height, frame_count, rate.numerator, rate.denominator)


def decode_video(path, binary: str | None = None) -> tuple[VideoHeader, Iterator[FrameBuffer]]:
    """Decode any container the transcoder understands into FrameBuffers."""
    header = probe_video(path, binary=None)
    exe = _require(binary or transcoder_binary())
    cmd = [
        exe, "-v", "error", "-i", str(path),
        "-f", "rawvideo", "-pix_fmt", "rgb24", "pipe:1",
    ]
    proc = subprocess.Popen(cmd, stdout=subprocess.PIPE, stderr=subprocess.PIPE)

    def frames() -> Iterator[FrameBuffer]:
        size = header.frame_bytes
        index = 0
        assert proc.stdout is not None
        try:
            while True:
                payload = proc.stdout.read(size)
                if not payload:
                    break
                if len(payload) < size:
                    raise TranscodeError(f"transcoder emitted a partial frame at index {index}")
                yield FrameBuffer(header.width, header.height, index, payload)
                index += 1
        finally:
            proc.stdout.close()
            stderr = proc.stderr.read().decode(errors="replace") if proc.stderr else ""
            code = proc.wait()
            if code != 0:
                raise TranscodeError(f"transcoder exited {code}: {stderr.strip()[-500:]}")
        if index != header.frame_count:
            raise TranscodeError(
                f"transcoder reported {header.frame_count} frames but delivered {index}"
            )

    return header, frames()


def encode_video(
    output_path,
    header: VideoHeader,
    frames: Iterable[FrameBuffer],
    audio_path=None,
    binary: str | None = None,
) -> None:
    """Mux raw frames (and optional WAV audio) into the requested container."""
    exe = _require(binary or transcoder_binary())
    cmd = [
        exe, "-v", "error", "-y",
        "-f", "rawvideo", "-pix_fmt", "rgb24",
        "-s", f"{header.width}x{header.height}",
        "-r", f"{header.fps_num}/{header.fps_den}",
        "-i", "pipe:0",
    ]
    if audio_path is not None:
        cmd += ["-i", str(audio_path), "-map", "0:v", "-map", "1:a", "-shortest"]
    cmd += [str(output_path)]
    proc = subprocess.Popen(cmd, stdin=subprocess.PIPE, stderr=subprocess.PIPE)
    assert proc.stdin is not None
    try:
        for frame in frames:
            proc.stdin.write(frame.pixels)
        proc.stdin.close()
    except BrokenPipeError:
        pass
    stderr = proc.stderr.read().decode(errors="replace") if proc.stderr else ""
    code = proc.wait()
    if code != 0:
        raise TranscodeError(f"transcoder exited {code}: {stderr.strip()[-500:]}")
