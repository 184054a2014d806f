"""Raw video format (RVF): uncompressed RGB frames behind a tiny header.

Layout, all little-endian:

    magic "RVF1" | u32 width | u32 height | u32 frame_count
    | u32 fps_num | u32 fps_den | frame_count * (width*height*3) bytes

Pixels are row-major interleaved 8-bit RGB.  The format exists so the
whole pipeline can be exercised without any codec; anything else goes
through the transcoder bridge.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import BinaryIO, Iterable, Iterator

import numpy as np

from avmask.errors import FormatError, ParameterError

MAGIC = b"RVF1"
_HEADER = struct.Struct("<4s5I")
HEADER_SIZE = _HEADER.size  # 24

# Guard against absurd headers before allocating frame buffers.
MAX_DIMENSION = 32768
MAX_FRAME_BYTES = 1 << 31


@dataclass(frozen=True)
class FrameBuffer:
    """One decoded frame: row-major interleaved RGB, 3 bytes per pixel."""

    width: int
    height: int
    index: int
    pixels: bytes

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ParameterError(f"frame dimensions must be positive, got {self.width}x{self.height}")
        expected = self.width * self.height * 3
        if len(self.pixels) != expected:
            raise ParameterError(
                f"frame {self.index}: pixel payload is {len(self.pixels)} bytes, expected {expected}"
            )

    def to_array(self) -> np.ndarray:
        """View the payload as an (H, W, 3) uint8 array (copy, writable)."""
        arr = np.frombuffer(self.pixels, dtype=np.uint8)
        return arr.reshape(self.height, self.width, 3).copy()

    @classmethod
    def from_array(cls, array: np.ndarray, index: int) -> "FrameBuffer":
        if array.ndim != 3 or array.shape[2] != 3:
            raise ParameterError(f"expected (H, W, 3) array, got shape {array.shape}")
        arr = np.ascontiguousarray(array, dtype=np.uint8)
        return cls(width=arr.shape[1], height=arr.shape[0], index=index, pixels=arr.tobytes())


@dataclass(frozen=True)
class VideoHeader:
    width: int
    height: int
    frame_count: int
    fps_num: int
    fps_den: int

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ParameterError(f"video dimensions must be positive, got {self.width}x{self.height}")
        if self.fps_num <= 0 or self.fps_den <= 0:
            raise ParameterError(f"fps must be a positive rational, got {self.fps_num}/{self.fps_den}")
        if self.frame_count < 0:
            raise ParameterError(f"frame_count must be >= 0, got {self.frame_count}")

    @property
    def frame_bytes(self) -> int:
        return self.width * self.height * 3

    @property
    def fps(self) -> float:
        return self.fps_num / self.fps_den


def pack_header(header: VideoHeader) -> bytes:
    return _HEADER.pack(
        MAGIC, header.width, header.height, header.frame_count, header.fps_num, header.fps_den
    )


def read_header(stream: BinaryIO) -> VideoHeader:
    raw = stream.read(HEADER_SIZE)
    if len(raw) < HEADER_SIZE:
        raise FormatError(f"truncated header: got {len(raw)} of {HEADER_SIZE} bytes", offset=len(raw))
    magic, width, height, frame_count, fps_num, fps_den = _HEADER.unpack(raw)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}", offset=0)
    if not (0 < width <= MAX_DIMENSION) or not (0 < height <= MAX_DIMENSION):
        raise FormatError(f"dimension overflow: {width}x{height}", offset=4)
    if width * height * 3 > MAX_FRAME_BYTES:
        raise FormatError(f"dimension overflow: frame of {width * height * 3} bytes", offset=4)
    if fps_num == 0 or fps_den == 0:
        raise FormatError(f"invalid fps {fps_num}/{fps_den}", offset=16)
    return VideoHeader(width, height, frame_count, fps_num, fps_den)


def read_rvf(stream: BinaryIO) -> tuple[VideoHeader, Iterator[FrameBuffer]]:
    """Parse the header eagerly and stream the frames lazily.

    Raises FormatError naming the byte offset on truncation or a bad header.
    """
    header = read_header(stream)

    def frames() -> Iterator[FrameBuffer]:
        size = header.frame_bytes
        for index in range(header.frame_count):
            payload = stream.read(size)
            if len(payload) < size:
                offset = HEADER_SIZE + index * size + len(payload)
                raise FormatError(
                    f"truncated stream in frame {index}: got {len(payload)} of {size} bytes",
                    offset=offset,
                )
            yield FrameBuffer(header.width, header.height, index, payload)

    return header, frames()


def write_rvf(header: VideoHeader, frames: Iterable[FrameBuffer], dest: BinaryIO) -> int:
    """Write a complete RVF stream; returns the byte count written.

    Every frame must match the header dimensions, and exactly
    header.frame_count frames must be supplied.
    """
    dest.write(_HEADER.pack(MAGIC, header.width, header.height, header.frame_count, header.fps_num, header.fps_den))
    written = HEADER_SIZE
    count = 0
    for i, frame in enumerate(frames):
        if frame.width != header.width or frame.height != header.height:
            raise ParameterError(
                f"frame {i}: dimensions {frame.width}x{frame.height} do not match "
                f"header {header.width}x{header.height}"
            )
        dest.write(frame.pixels)
        written += len(frame.pixels)
        count += 1
    if count != header.frame_count:
        raise ParameterError(f"header promises {header.frame_count} frames but {count} were supplied")
    return written


def read_rvf_file(path) -> tuple[VideoHeader, list[FrameBuffer]]:
    """Read a whole RVF file into memory."""
    with open(path, "rb") as fh:
        header, frames = read_rvf(fh)
        return header, list(frames)


def read_header_file(path) -> VideoHeader:
    with open(path, "rb") as fh:
        return read_header(fh)


def read_rvf_range(path, start: int, end: int) -> tuple[VideoHeader, list[FrameBuffer]]:
    """Read frames [start, end) by seeking, without touching the rest."""
    with open(path, "rb") as fh:
        header = read_header(fh)
        if not (0 <= start <= end <= header.frame_count):
            raise ParameterError(
                f"range [{start}, {end}) outside video of {header.frame_count} frames"
            )
        size = header.frame_bytes
        fh.seek(HEADER_SIZE + start * size)
        frames = []
        for index in range(start, end):
            payload = fh.read(size)
            if len(payload) < size:
                offset = HEADER_SIZE + index * size + len(payload)
                raise FormatError(
                    f"truncated stream in frame {index}: got {len(payload)} of {size} bytes",
                    offset=offset,
                )
            frames.append(FrameBuffer(header.width, header.height, index, payload))
        return header, frames


def frame_byte_range(header: VideoHeader, start: int, end: int) -> tuple[int, int]:
    """Byte span [lo, hi) of frames [start, end) in a serialized stream."""
    if not (0 <= start <= end <= header.frame_count):
        raise ParameterError(
            f"range [{start}, {end}) outside video of {header.frame_count} frames"
        )
    size = header.frame_bytes
    return HEADER_SIZE + start * size, HEADER_SIZE + end * size


def write_rvf_file(path, header: VideoHeader, frames: Iterable[FrameBuffer]) -> int:
    with open(path, "wb") as fh:
        return write_rvf(header, frames, fh)


def frames_to_arrays(frames: Iterable[FrameBuffer]) -> list[np.ndarray]:
    return [f.to_array() for f in frames]


def arrays_to_frames(arrays: Iterable[np.ndarray], start_index: int = 0) -> list[FrameBuffer]:
    return [FrameBuffer.from_array(a, start_index + i) for i, a in enumerate(arrays)]
