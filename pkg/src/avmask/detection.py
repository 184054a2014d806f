"""Person-region ingestion and rasterization.

Detections arrive as a JSON document (the contract replacing learned
detectors); this module validates it, filters by confidence, expands
run-length regions into pixel masks, and provides a background
subtraction baseline so synthetic test footage can be detected without
any model.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from jsonschema import Draft202012Validator
from scipy import ndimage

from avmask.errors import ConfigError, FormatError, ParameterError
from avmask.overlay import LandmarkFrame

DETECTIONS_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "detections",
    "type": "object",
    "required": ["width", "height", "fps", "frames"],
    "properties": {
        "width": {"type": "integer", "minimum": 1},
        "height": {"type": "integer", "minimum": 1},
        "fps": {
            "type": "array",
            "prefixItems": [
                {"type": "integer", "minimum": 1},
                {"type": "integer", "minimum": 1},
            ],
            "minItems": 2,
            "maxItems": 2,
        },
        "frames": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["index", "persons"],
                "properties": {
                    "index": {"type": "integer", "minimum": 0},
                    "persons": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["id", "bbox", "confidence"],
                            "properties": {
                                "id": {"type": "string"},
                                "bbox": {
                                    "type": "array",
                                    "prefixItems": [
                                        {"type": "integer"},
                                        {"type": "integer"},
                                        {"type": "integer", "minimum": 0},
                                        {"type": "integer", "minimum": 0},
                                    ],
                                    "minItems": 4,
                                    "maxItems": 4,
                                },
                                "confidence": {"type": "number", "minimum": 0, "maximum": 1},
                                "rle": {
                                    "type": "array",
                                    "items": {
                                        "type": "array",
                                        "prefixItems": [
                                            {"type": "integer", "minimum": 0},
                                            {"type": "integer", "minimum": 1},
                                        ],
                                        "minItems": 2,
                                        "maxItems": 2,
                                    },
                                },
                                "landmarks": {
                                    "type": "object",
                                    "properties": {
                                        "pose": {"$ref": "#/$defs/block33"},
                                        "face": {"$ref": "#/$defs/block478"},
                                        "left_hand": {"$ref": "#/$defs/block21"},
                                        "right_hand": {"$ref": "#/$defs/block21"},
                                    },
                                },
                            },
                        },
                    },
                },
            },
        },
    },
    "$defs": {
        "point": {
            "type": "array",
            "items": {"type": "number"},
            "minItems": 4,
            "maxItems": 4,
        },
        "block33": {"type": "array", "items": {"$ref": "#/$defs/point"}, "minItems": 33, "maxItems": 33},
        "block478": {"type": "array", "items": {"$ref": "#/$defs/point"}, "minItems": 478, "maxItems": 478},
        "block21": {"type": "array", "items": {"$ref": "#/$defs/point"}, "minItems": 21, "maxItems": 21},
    },
}

_validator = Draft202012Validator(DETECTIONS_SCHEMA)


@dataclass
class PersonDetection:
    """One person in one frame: bbox plus optional mask and landmarks."""

    person_id: str
    bbox: tuple[int, int, int, int]  # x, y, w, h in pixels
    confidence: float
    region: Optional[list[tuple[int, int]]] = None  # (offset, length) runs over the bbox, row-major
    landmarks: Optional[LandmarkFrame] = None

    def __post_init__(self):
        if not (0.0 <= self.confidence <= 1.0):
            raise ParameterError(f"confidence must be in [0, 1], got {self.confidence}")
        x, y, w, h = self.bbox
        if w < 0 or h < 0:
            raise ParameterError(f"bbox extent must be non-negative, got {self.bbox}")


@dataclass
class DetectionTimeline:
    width: int
    height: int
    fps: tuple[int, int]
    frames: list[tuple[int, list[PersonDetection]]] = field(default_factory=list)

    def __post_init__(self):
        indices = [i for i, _ in self.frames]
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise ParameterError("frame indices must be strictly increasing")

    def persons_at(self, index: int) -> list[PersonDetection]:
        for i, persons in self.frames:
            if i == index:
                return persons
        return []

    def as_map(self) -> dict[int, list[PersonDetection]]:
        return {i: persons for i, persons in self.frames}


def _error_path(error) -> str:
    parts = []
    for item in error.absolute_path:
        if isinstance(item, int):
            parts.append(f"[{item}]")
        else:
            parts.append(f".{item}" if parts else str(item))
    return "".join(parts) or "(document root)"


def parse_detections(document) -> DetectionTimeline:
    """Parse and validate a detections document (dict or JSON text).

    Unknown keys are ignored; the first schema violation is reported with
    its field path.
    """
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise FormatError(f"detections document is not valid JSON: {exc}") from exc
    errors = sorted(_validator.iter_errors(document), key=lambda e: list(e.absolute_path))
    if errors:
        first = errors[0]
        raise ConfigError(first.message, path=_error_path(first))

    frames = []
    for frame_doc in document["frames"]:
        persons = []
        for p in frame_doc["persons"]:
            landmarks = None
            if "landmarks" in p and p["landmarks"]:
                landmarks = LandmarkFrame.from_document(p["landmarks"])
            persons.append(
                PersonDetection(
                    person_id=p["id"],
                    bbox=tuple(p["bbox"]),
                    confidence=float(p["confidence"]),
                    region=[tuple(run) for run in p["rle"]] if p.get("rle") else None,
                    landmarks=landmarks,
                )
            )
        frames.append((frame_doc["index"], persons))
    try:
        return DetectionTimeline(
            width=document["width"],
            height=document["height"],
            fps=tuple(document["fps"]),
            frames=frames,
        )
    except ParameterError as exc:
        # semantic rule the schema cannot express (e.g. frame ordering)
        raise ConfigError(str(exc), path="frames") from exc


def emit_detections(timeline: DetectionTimeline) -> dict:
    """Serialize a timeline back to the canonical document form."""
    frames = []
    for index, persons in timeline.frames:
        persons_doc = []
        for p in persons:
            doc = {
                "id": p.person_id,
                "bbox": list(p.bbox),
                "confidence": p.confidence,
            }
            if p.region is not None:
                doc["rle"] = [list(run) for run in p.region]
            if p.landmarks is not None:
                doc["landmarks"] = p.landmarks.to_document()
            persons_doc.append(doc)
        frames.append({"index": index, "persons": persons_doc})
    return {
        "width": timeline.width,
        "height": timeline.height,
        "fps": list(timeline.fps),
        "frames": frames,
    }


def filter_by_confidence(timeline: DetectionTimeline, threshold: float) -> DetectionTimeline:
    """Keep exactly the detections with confidence >= threshold.

    Frame entries are preserved even when they end up empty, so frame
    alignment with the source video never changes.
    """
    if not (0.0 <= threshold <= 1.0):
        raise ParameterError(f"threshold must be in [0, 1], got {threshold}")
    frames = [
        (index, [p for p in persons if p.confidence >= threshold])
        for index, persons in timeline.frames
    ]
    return DetectionTimeline(timeline.width, timeline.height, timeline.fps, frames)


def rasterize_region(det: PersonDetection, width: int, height: int) -> np.ndarray:
    """Expand a detection into a full-frame boolean mask.

    With a run-length region the runs are decoded in row-major bbox
    coordinates; without one the whole (clamped) bbox is foreground.
    Out-of-frame parts of the bbox contribute nothing.
    """
    if width <= 0 or height <= 0:
        raise ParameterError(f"frame dimensions must be positive, got {width}x{height}")
    mask = np.zeros((height, width), dtype=bool)
    x, y, w, h = det.bbox
    if w == 0 or h == 0:
        return mask
    if det.region is None:
        x0, y0 = max(x, 0), max(y, 0)
        x1, y1 = min(x + w, width), min(y + h, height)
        if x1 > x0 and y1 > y0:
            mask[y0:y1, x0:x1] = True
        return mask

    box = np.zeros(w * h, dtype=bool)
    for offset, length in det.region:
        if offset + length > w * h:
            raise FormatError(
                f"run ({offset}, {length}) extends past bbox area {w}x{h} for person {det.person_id!r}"
            )
        box[offset : offset + length] = True
    box = box.reshape(h, w)
    # Intersect the bbox-local mask with the frame.
    src_y0, src_x0 = max(0, -y), max(0, -x)
    dst_y0, dst_x0 = max(y, 0), max(x, 0)
    copy_h = min(y + h, height) - dst_y0
    copy_w = min(x + w, width) - dst_x0
    if copy_h > 0 and copy_w > 0:
        mask[dst_y0 : dst_y0 + copy_h, dst_x0 : dst_x0 + copy_w] = box[
            src_y0 : src_y0 + copy_h, src_x0 : src_x0 + copy_w
        ]
    return mask


def encode_region(component: np.ndarray) -> list[tuple[int, int]]:
    """Run-length encode a boolean bbox-local mask (row-major offsets)."""
    flat = component.reshape(-1)
    runs = []
    padded = np.concatenate(([False], flat, [False]))
    changes = np.flatnonzero(padded[1:] != padded[:-1])
    for start, stop in zip(changes[::2], changes[1::2]):
        runs.append((int(start), int(stop - start)))
    return runs


_FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=int)


def bgsub_detect(
    reference: np.ndarray,
    frame: np.ndarray,
    tau: float,
    min_area: int,
) -> list[PersonDetection]:
    """Background-subtraction baseline detector for synthetic footage.

    Pixels whose max-channel absolute difference against the reference
    exceeds tau are foreground; 4-connected components of at least
    min_area pixels become detections with confidence 1.0.
    """
    if hasattr(reference, "to_array"):
        reference = reference.to_array()
    if hasattr(frame, "to_array"):
        frame = frame.to_array()
    if reference.shape != frame.shape:
        raise ParameterError(
            f"reference {reference.shape} and frame {frame.shape} dimensions differ"
        )
    diff = np.abs(frame.astype(np.int16) - reference.astype(np.int16)).max(axis=2)
    foreground = diff > tau
    labels, count = ndimage.label(foreground, structure=_FOUR_CONNECTED)
    detections = []
    slices = ndimage.find_objects(labels)
    components = []
    for label_idx, slc in enumerate(slices, start=1):
        if slc is None:
            continue
        component = labels[slc] == label_idx
        area = int(component.sum())
        if area < min_area:
            continue
        components.append((slc[0].start, slc[1].start, slc, component))
    components.sort(key=lambda item: (item[0], item[1]))
    for k, (_, _, slc, component) in enumerate(components):
        y0, y1 = slc[0].start, slc[0].stop
        x0, x1 = slc[1].start, slc[1].stop
        detections.append(
            PersonDetection(
                person_id=f"p{k}",
                bbox=(int(x0), int(y0), int(x1 - x0), int(y1 - y0)),
                confidence=1.0,
                region=encode_region(component),
            )
        )
    return detections
