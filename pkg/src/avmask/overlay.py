"""Information-preserving overlays: skeleton, face dots, hand skeletons.

Landmarks come in normalized [0,1] coordinates with a visibility score;
renderers rasterize them with integer line drawing and filled discs so
output is deterministic down to the byte. Only drawn primitives touch
the frame.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from typing import Optional

import numpy as np

from avmask.errors import ConfigError, ParameterError

POSE_POINTS = 33
FACE_POINTS = 478
HAND_POINTS = 21

_BLOCK_SIZES = {
    "pose": POSE_POINTS,
    "face": FACE_POINTS,
    "left_hand": HAND_POINTS,
    "right_hand": HAND_POINTS,
}


def _as_block(name: str, rows) -> np.ndarray:
    arr = np.asarray(rows, dtype=np.float64)
    expected = _BLOCK_SIZES[name]
    if arr.ndim != 2 or arr.shape != (expected, 4):
        raise ParameterError(
            f"landmark block {name!r} must be {expected} points of (x, y, z, visibility), "
            f"got shape {arr.shape}"
        )
    return arr


@dataclass
class LandmarkFrame:
    """Landmark blocks for one frame; each block optional.

    Points are rows of (x, y, z, visibility). x and y are normalized to
    [0,1] when in frame; z is unitless depth and does not affect 2D
    rendering; visibility is in [0,1].
    """

    pose: Optional[np.ndarray] = None  # (33, 4)
    face: Optional[np.ndarray] = None  # (478, 4)
    left_hand: Optional[np.ndarray] = None  # (21, 4)
    right_hand: Optional[np.ndarray] = None  # (21, 4)

    def __post_init__(self):
        for name in _BLOCK_SIZES:
            value = getattr(self, name)
            if value is not None:
                setattr(self, name, _as_block(name, value))

    @classmethod
    def from_document(cls, doc: dict) -> "LandmarkFrame":
        known = {k: v for k, v in doc.items() if k in _BLOCK_SIZES}
        return cls(**known)

    def to_document(self) -> dict:
        doc = {}
        for name in _BLOCK_SIZES:
            value = getattr(self, name)
            if value is not None:
                doc[name] = value.tolist()
        return doc


@dataclass(frozen=True)
class EdgeTopology:
    """Named edge list over one landmark block."""

    name: str
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        for a, b in self.edges:
            if a == b:
                raise ConfigError(f"self-edge ({a}, {b})", path=f"topology {self.name!r}")
            if a < 0 or b < 0:
                raise ConfigError(f"negative index in edge ({a}, {b})", path=f"topology {self.name!r}")

    def validate_for(self, block_size: int) -> None:
        for a, b in self.edges:
            if a >= block_size or b >= block_size:
                raise ConfigError(
                    f"edge ({a}, {b}) exceeds block size {block_size}",
                    path=f"topology {self.name!r}",
                )


def load_topology(source) -> EdgeTopology:
    """Load a topology from a dict or a JSON file path."""
    if isinstance(source, dict):
        doc = source
    else:
        with open(source, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    if "name" not in doc or "edges" not in doc:
        raise ConfigError("topology requires 'name' and 'edges'", path=str(source))
    return EdgeTopology(name=doc["name"], edges=tuple((int(a), int(b)) for a, b in doc["edges"]))


def _packaged_topology(filename: str) -> EdgeTopology:
    text = resources.files("avmask").joinpath("topologies").joinpath(filename).read_text()
    return load_topology(json.loads(text))


def default_pose_topology() -> EdgeTopology:
    """35-edge skeleton over the 33-point full-body convention."""
    return _packaged_topology("pose33.json")


def default_hand_topology() -> EdgeTopology:
    """21-edge skeleton over the 21-point single-hand convention."""
    return _packaged_topology("hand21.json")


@dataclass(frozen=True)
class OverlayStyle:
    color: tuple[int, int, int] = (255, 255, 255)
    thickness: int = 1  # line stamp: disc of radius thickness // 2 at each line pixel
    joint_radius: int = 2
    min_visibility: float = 0.5

    def __post_init__(self):
        if self.thickness < 1:
            raise ParameterError(f"thickness must be >= 1, got {self.thickness}")
        if self.joint_radius < 0:
            raise ParameterError(f"joint_radius must be >= 0, got {self.joint_radius}")
        if not (0.0 <= self.min_visibility <= 1.0):
            raise ParameterError(f"min_visibility must be in [0, 1], got {self.min_visibility}")


def project_point(pt, width: int, height: int) -> Optional[tuple[int, int]]:
    """Map normalized (x, y, ...) to pixel (px, py), or None when out of frame.

    px = floor(x*W), py = floor(y*H), clamped so coordinates exactly on
    the far edge still land on the last pixel.
    """
    if width <= 0 or height <= 0:
        raise ParameterError(f"frame dimensions must be positive, got {width}x{height}")
    x, y = float(pt[0]), float(pt[1])
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        return None
    px = min(int(np.floor(x * width)), width - 1)
    py = min(int(np.floor(y * height)), height - 1)
    return px, py


def _disc_offsets(radius: int) -> np.ndarray:
    span = np.arange(-radius, radius + 1)
    dy, dx = np.meshgrid(span, span, indexing="ij")
    keep = dy * dy + dx * dx <= radius * radius
    return np.stack([dy[keep], dx[keep]], axis=1)


def _stamp(canvas: np.ndarray, px: int, py: int, radius: int, color) -> None:
    height, width = canvas.shape[:2]
    for dy, dx in _disc_offsets(radius):
        x, y = px + dx, py + dy
        if 0 <= x < width and 0 <= y < height:
            canvas[y, x] = color


def _line_pixels(p0: tuple[int, int], p1: tuple[int, int]):
    """Integer line rasterization between two pixel coordinates."""
    x0, y0 = p0
    x1, y1 = p1
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    while True:
        yield x0, y0
        if x0 == x1 and y0 == y1:
            return
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy


def _draw_line(canvas, p0, p1, color, thickness: int) -> None:
    radius = thickness // 2
    for x, y in _line_pixels(p0, p1):
        _stamp(canvas, x, y, radius, color)


def _render_block_skeleton(canvas, block, topology, style) -> None:
    topology.validate_for(block.shape[0])
    projected = []
    height, width = canvas.shape[:2]
    for row in block:
        if row[3] < style.min_visibility:
            projected.append(None)
            continue
        projected.append(project_point(row, width, height))
    for a, b in topology.edges:
        if projected[a] is not None and projected[b] is not None:
            _draw_line(canvas, projected[a], projected[b], style.color, style.thickness)
    for p in projected:
        if p is not None:
            _stamp(canvas, p[0], p[1], style.joint_radius, style.color)


def render_skeleton(
    frame: np.ndarray,
    landmarks: LandmarkFrame,
    topology: Optional[EdgeTopology] = None,
    style: OverlayStyle = OverlayStyle(),
) -> np.ndarray:
    """Draw the body skeleton: topology edges plus joint discs."""
    if landmarks.pose is None:
        raise ParameterError("pose landmark block is required for skeleton rendering")
    out = frame.copy()
    _render_block_skeleton(out, landmarks.pose, topology or default_pose_topology(), style)
    return out


def render_face_mesh(
    frame: np.ndarray,
    landmarks: LandmarkFrame,
    style: OverlayStyle = OverlayStyle(),
    topology: Optional[EdgeTopology] = None,
) -> np.ndarray:
    """Draw face points as single-pixel dots, or as edges when a
    topology is supplied."""
    if landmarks.face is None:
        raise ParameterError("face landmark block is required for face rendering")
    out = frame.copy()
    if topology is not None:
        _render_block_skeleton(out, landmarks.face, topology, style)
        return out
    height, width = out.shape[:2]
    for row in landmarks.face:
        if row[3] < style.min_visibility:
            continue
        p = project_point(row, width, height)
        if p is not None:
            out[p[1], p[0]] = style.color
    return out


def compose_holistic(
    frame: np.ndarray,
    landmarks: LandmarkFrame,
    pose_topology: Optional[EdgeTopology] = None,
    hand_topology: Optional[EdgeTopology] = None,
    face_topology: Optional[EdgeTopology] = None,
    style: OverlayStyle = OverlayStyle(),
) -> np.ndarray:
    """Render pose, then hands, then face, skipping absent blocks.

    Fixed order keeps output deterministic when primitives overlap.
    """
    out = frame.copy()
    if landmarks.pose is not None:
        _render_block_skeleton(out, landmarks.pose, pose_topology or default_pose_topology(), style)
    for block in (landmarks.left_hand, landmarks.right_hand):
        if block is not None:
            _render_block_skeleton(out, block, hand_topology or default_hand_topology(), style)
    if landmarks.face is not None:
        out = render_face_mesh(out, landmarks, style=style, topology=face_topology)
    return out
