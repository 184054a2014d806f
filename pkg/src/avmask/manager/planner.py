"""Chunk planning: split a frame range into cores with padded inputs."""

from __future__ import annotations

from dataclasses import dataclass

from avmask.errors import ParameterError
from avmask.hiding import HidingParams

DEFAULT_CORE_SIZE = 250


@dataclass(frozen=True)
class ChunkPlan:
    core_start: int
    core_end: int
    input_start: int
    input_end: int

    @property
    def core_size(self) -> int:
        return self.core_end - self.core_start


def plan_chunks(frame_count: int, core_size: int = DEFAULT_CORE_SIZE, overlap: int = 0) -> list[ChunkPlan]:
    """Partition [0, frame_count) into cores of core_size frames.

    Each chunk's input range is its core extended by overlap on both
    sides, clamped to the video; cores tile the video exactly.
    """
    if core_size < 1:
        raise ParameterError(f"core_size must be >= 1, got {core_size}")
    if overlap < 0:
        raise ParameterError(f"overlap must be >= 0, got {overlap}")
    if frame_count < 0:
        raise ParameterError(f"frame_count must be >= 0, got {frame_count}")
    plans = []
    i = 0
    while i * core_size < frame_count:
        core_start = i * core_size
        core_end = min((i + 1) * core_size, frame_count)
        plans.append(
            ChunkPlan(
                core_start=core_start,
                core_end=core_end,
                input_start=max(0, core_start - overlap),
                input_end=min(frame_count, core_end + overlap),
            )
        )
        i += 1
    return plans


def auto_overlap(hiding: HidingParams) -> int:
    """Overlap sized for the configured kernel's temporal needs.

    The median kernel reads (median_window - 1) // 2 frames each way;
    planning with median_window - 1 keeps a full margin even at chunk
    edges. Stateless kernels need none.
    """
    if hiding.strategy == "inpaint_median":
        return hiding.median_window - 1
    return 0
