"""Single-pass segment execution: hide, overlay, record kinematics.

A segment is any contiguous frame range plus enough neighbor frames to
satisfy the hiding kernel's temporal window. Output depends only on the
inputs and config, so distributed chunk processing and single-pass
processing agree byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from avmask.detection import DetectionTimeline, PersonDetection, rasterize_region
from avmask.errors import PlannerError
from avmask.hiding import apply_strategy, inpaint_median, resolve_scope
from avmask.overlay import compose_holistic, render_face_mesh, render_skeleton
from avmask.pipeline.config import MaskingConfig, OverlaySpec
from avmask.pipeline.kinematics import FrameKinematics, PersonKinematics

DetectionSource = Union[DetectionTimeline, dict]


@dataclass
class SegmentResult:
    start_index: int
    frames: list[np.ndarray]
    kinematics: list[FrameKinematics] = field(default_factory=list)
    skipped_overlays: list[dict] = field(default_factory=list)


def _detection_map(detections: Optional[DetectionSource]) -> dict[int, list[PersonDetection]]:
    if detections is None:
        return {}
    if isinstance(detections, DetectionTimeline):
        return detections.as_map()
    return dict(detections)


def _build_mask(
    persons: Sequence[PersonDetection], width: int, height: int, threshold: float
) -> np.ndarray:
    mask = np.zeros((height, width), dtype=bool)
    for det in persons:
        if det.confidence >= threshold:
            mask |= rasterize_region(det, width, height)
    return mask


def _apply_overlay(
    frame: np.ndarray, spec: OverlaySpec, det: PersonDetection
) -> tuple[np.ndarray, Optional[str]]:
    """Render one overlay for one person; returns (frame, missing block or None)."""
    lm = det.landmarks
    if lm is None:
        return frame, "landmarks"
    if spec.kind == "skeleton":
        if lm.pose is None:
            return frame, "pose"
        return render_skeleton(frame, lm, style=spec.style), None
    if spec.kind == "face_mesh":
        if lm.face is None:
            return frame, "face"
        return render_face_mesh(frame, lm, style=spec.style), None
    # holistic renders whatever blocks exist; nothing present means skip
    if lm.pose is None and lm.face is None and lm.left_hand is None and lm.right_hand is None:
        return frame, "landmarks"
    return compose_holistic(frame, lm, style=spec.style), None


def process_segment(
    frames: Sequence[np.ndarray],
    detections: Optional[DetectionSource],
    config: MaskingConfig,
    start_index: int = 0,
    core: Optional[tuple[int, int]] = None,
    total_frames: Optional[int] = None,
) -> SegmentResult:
    """Mask the core frame range using `frames` as the available context.

    frames[i] is absolute frame start_index + i. core is an absolute
    [start, end) range defaulting to everything supplied. total_frames,
    when known, lets the executor tell a video boundary (window shrinks)
    from missing context (planner bug, raises).
    """
    available_start = start_index
    available_end = start_index + len(frames)
    if core is None:
        core = (available_start, available_end)
    core_start, core_end = core
    if core_start < available_start or core_end > available_end:
        raise PlannerError(
            f"core [{core_start}, {core_end}) outside available frames "
            f"[{available_start}, {available_end})"
        )
    if total_frames is None:
        total_frames = available_end

    det_map = _detection_map(detections)
    radius = config.hiding.temporal_radius
    if radius:
        want_start = max(core_start - radius, 0)
        want_end = min(core_end + radius, total_frames)
        if want_start < available_start or want_end > available_end:
            raise PlannerError(
                f"inpainting window needs frames [{want_start}, {want_end}) but only "
                f"[{available_start}, {available_end}) are available"
            )

    height, width = frames[0].shape[:2] if len(frames) else (0, 0)
    person_masks = [
        _build_mask(det_map.get(start_index + i, ()), width, height, config.confidence_threshold)
        for i in range(len(frames))
    ]
    scope_masks = [resolve_scope(m, config.hiding.scope) for m in person_masks]

    result = SegmentResult(start_index=core_start, frames=[])
    want_kinematics = config.kinematics_json or config.kinematics_csv

    for absolute in range(core_start, core_end):
        local = absolute - start_index
        if radius:
            # clamp the window to the video, not the chunk, so chunked
            # and single-pass output agree at the video edges
            lo = max(absolute - radius, 0) - start_index
            hi = min(absolute + radius + 1, total_frames) - start_index
            out = _inpaint_clamped(frames, scope_masks, lo, hi, local, radius)
        else:
            out = apply_strategy(config.hiding, frames, scope_masks, local)

        persons = [
            det
            for det in det_map.get(absolute, ())
            if det.confidence >= config.confidence_threshold
        ]
        for spec in config.overlays:
            for det in persons:
                out, missing = _apply_overlay(out, spec, det)
                if missing is not None:
                    result.skipped_overlays.append(
                        {
                            "frame": absolute,
                            "person": det.person_id,
                            "overlay": spec.kind,
                            "missing": missing,
                        }
                    )
        result.frames.append(out)

        if want_kinematics:
            record = FrameKinematics(index=absolute)
            for det in persons:
                if det.landmarks is not None:
                    record.persons.append(
                        PersonKinematics(person_id=det.person_id, landmarks=det.landmarks)
                    )
            result.kinematics.append(record)

    return result


def _inpaint_clamped(frames, masks, lo: int, hi: int, center: int, radius: int) -> np.ndarray:
    """Run the median kernel on a window clamped at the video edges.

    Frame indices past the video are replaced by the nearest edge frame
    so the window keeps its odd length with the center in the middle;
    duplicated frames carry duplicated masks, so edge frames simply
    weigh more in the median there.
    """
    indices = [min(max(k, lo), hi - 1) for k in range(center - radius, center + radius + 1)]
    window_frames = [frames[i] for i in indices]
    window_masks = [masks[i] for i in indices]
    return inpaint_median(window_frames, window_masks, radius)
