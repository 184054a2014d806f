"""De-identification kernels over masked pixel regions.

Each kernel is a pure function on a (H, W, 3) uint8 frame and a
(H, W) boolean mask. The contract shared by all of them: pixels outside
the mask come back byte-identical, and only the strategy decides what
replaces the inside.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage

from avmask.errors import ParameterError

STRATEGIES = ("blackout", "blur", "pixelate", "contours", "inpaint_median", "none")
SCOPES = ("persons", "background", "both")


@dataclass(frozen=True)
class HidingParams:
    """Parameters for the video hiding stage.

    median_window is the temporal extent of inpaint_median; the chunk
    planner uses it to size overlap, so it lives here with the kernel.
    """

    strategy: str = "blackout"
    blur_level: int = 5
    block_size: int = 8
    canny_sigma: float = 1.0
    canny_low: float = 20.0
    canny_high: float = 60.0
    median_window: int = 5
    scope: str = "persons"

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ParameterError(f"unknown hiding strategy {self.strategy!r}")
        if self.scope not in SCOPES:
            raise ParameterError(f"unknown hiding scope {self.scope!r}")
        if not (1 <= self.blur_level <= 10):
            raise ParameterError(f"blur_level must be in [1, 10], got {self.blur_level}")
        if self.block_size < 1:
            raise ParameterError(f"block_size must be >= 1, got {self.block_size}")
        if not self.canny_low < self.canny_high:
            raise ParameterError(
                f"canny thresholds must satisfy low < high, got ({self.canny_low}, {self.canny_high})"
            )
        if self.median_window < 3 or self.median_window % 2 == 0:
            raise ParameterError(
                f"median_window must be odd and >= 3, got {self.median_window}"
            )

    @property
    def temporal_radius(self) -> int:
        """Frames of context needed on each side of a frame."""
        if self.strategy == "inpaint_median":
            return (self.median_window - 1) // 2
        return 0


def _check_pair(frame: np.ndarray, mask: np.ndarray) -> None:
    if frame.ndim != 3 or frame.shape[2] != 3:
        raise ParameterError(f"frame must be (H, W, 3), got {frame.shape}")
    if mask.shape != frame.shape[:2]:
        raise ParameterError(
            f"mask {mask.shape} does not match frame {frame.shape[:2]}"
        )


def gaussian_kernel(sigma: float) -> np.ndarray:
    """1-D Gaussian taps at radius ceil(3*sigma), normalized to sum 1."""
    if sigma <= 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    radius = math.ceil(3.0 * sigma)
    k = np.arange(-radius, radius + 1, dtype=np.float64)
    weights = np.exp(-(k * k) / (2.0 * sigma * sigma))
    return weights / weights.sum()


def _smooth(image: np.ndarray, sigma: float) -> np.ndarray:
    # clamp-to-edge replication on both axes
    weights = gaussian_kernel(sigma)
    out = ndimage.convolve1d(image.astype(np.float64), weights, axis=0, mode="nearest")
    return ndimage.convolve1d(out, weights, axis=1, mode="nearest")


def _round_half_up(values: np.ndarray) -> np.ndarray:
    return np.floor(values + 0.5)


def apply_blackout(frame: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Masked pixels become (0, 0, 0)."""
    _check_pair(frame, mask)
    out = frame.copy()
    out[mask] = 0
    return out


def apply_blur(frame: np.ndarray, mask: np.ndarray, blur_level: int) -> np.ndarray:
    """Gaussian blur at sigma == blur_level, written only inside the mask.

    The convolution runs over the whole frame so masked pixels near the
    boundary blend with real neighbors instead of a halo.
    """
    _check_pair(frame, mask)
    if not (1 <= blur_level <= 10) or int(blur_level) != blur_level:
        raise ParameterError(f"blur_level must be an integer in [1, 10], got {blur_level}")
    out = frame.copy()
    if not mask.any():
        return out
    blurred = np.empty_like(frame, dtype=np.float64)
    for c in range(3):
        blurred[:, :, c] = _smooth(frame[:, :, c], float(blur_level))
    blurred = np.clip(_round_half_up(blurred), 0, 255).astype(np.uint8)
    out[mask] = blurred[mask]
    return out


def apply_pixelate(frame: np.ndarray, mask: np.ndarray, block_size: int) -> np.ndarray:
    """Replace masked pixels with their cell's per-channel integer mean.

    Cells are block_size squares anchored at (0, 0); edge cells are
    clipped and averaged over the clipped extent only. Means come from
    the original frame, so the operation is idempotent on a fixed grid.
    """
    _check_pair(frame, mask)
    if block_size < 1 or int(block_size) != block_size:
        raise ParameterError(f"block_size must be an integer >= 1, got {block_size}")
    out = frame.copy()
    if block_size == 1 or not mask.any():
        return out
    height, width = frame.shape[:2]
    row_starts = np.arange(0, height, block_size)
    col_starts = np.arange(0, width, block_size)
    sums = np.add.reduceat(
        np.add.reduceat(frame.astype(np.int64), row_starts, axis=0), col_starts, axis=1
    )
    row_counts = np.minimum(row_starts + block_size, height) - row_starts
    col_counts = np.minimum(col_starts + block_size, width) - col_starts
    counts = np.outer(row_counts, col_counts)[:, :, None]
    # round half up on an integer ratio: floor(s/c + 1/2) == (2s + c) // (2c)
    means = ((2 * sums + counts) // (2 * counts)).astype(np.uint8)
    expanded = np.repeat(np.repeat(means, block_size, axis=0), block_size, axis=1)
    expanded = expanded[:height, :width]
    out[mask] = expanded[mask]
    return out


_SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
_SOBEL_Y = np.array([[-1, -2, -1], [0, 0, 0], [1, 2, 1]], dtype=np.float64)

# quantized gradient directions: (dy, dx) steps for the two NMS neighbors
_DIRECTION_STEPS = {0: (0, 1), 45: (1, 1), 90: (1, 0), 135: (1, -1)}


def luma(frame: np.ndarray) -> np.ndarray:
    """Integer luma: round(0.299 R + 0.587 G + 0.114 B)."""
    f = frame.astype(np.float64)
    return _round_half_up(0.299 * f[:, :, 0] + 0.587 * f[:, :, 1] + 0.114 * f[:, :, 2])


def _quantize_direction(gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    angle = np.degrees(np.arctan2(gy, gx)) % 180.0
    bins = np.zeros(angle.shape, dtype=np.int16)
    bins[(angle >= 22.5) & (angle < 67.5)] = 45
    bins[(angle >= 67.5) & (angle < 112.5)] = 90
    bins[(angle >= 112.5) & (angle < 157.5)] = 135
    return bins


def canny_edges(
    gray: np.ndarray, sigma: float, low: float, high: float
) -> np.ndarray:
    """Boolean edge map: smooth, Sobel, direction-quantized thinning,
    double threshold, 8-connected hysteresis.

    Thinning keeps a pixel iff its magnitude is >= the neighbor against
    the gradient direction and strictly > the neighbor along it, so a
    two-pixel magnitude plateau survives as exactly one pixel.
    """
    if not low < high:
        raise ParameterError(f"thresholds must satisfy low < high, got ({low}, {high})")
    smoothed = _smooth(gray, sigma)
    gx = ndimage.correlate(smoothed, _SOBEL_X, mode="nearest")
    gy = ndimage.correlate(smoothed, _SOBEL_Y, mode="nearest")
    magnitude = np.hypot(gx, gy)
    direction = _quantize_direction(gx, gy)

    height, width = gray.shape
    padded = np.zeros((height + 2, width + 2), dtype=np.float64)
    padded[1:-1, 1:-1] = magnitude
    thinned = np.zeros_like(magnitude)
    for bin_value, (dy, dx) in _DIRECTION_STEPS.items():
        sel = direction == bin_value
        ahead = padded[1 + dy : height + 1 + dy, 1 + dx : width + 1 + dx]
        behind = padded[1 - dy : height + 1 - dy, 1 - dx : width + 1 - dx]
        keep = sel & (magnitude >= behind) & (magnitude > ahead)
        thinned[keep] = magnitude[keep]

    strong = thinned >= high
    candidate = thinned >= low
    labels, _ = ndimage.label(candidate, structure=np.ones((3, 3), dtype=int))
    strong_labels = np.unique(labels[strong])
    strong_labels = strong_labels[strong_labels != 0]
    return candidate & np.isin(labels, strong_labels)


def apply_contours(
    frame: np.ndarray,
    mask: np.ndarray,
    sigma: float = 1.0,
    low: float = 20.0,
    high: float = 60.0,
) -> np.ndarray:
    """Inside the mask: white where an edge was found, black elsewhere."""
    _check_pair(frame, mask)
    out = frame.copy()
    if not mask.any():
        return out
    edges = canny_edges(luma(frame), sigma, low, high)
    region = np.zeros_like(frame)
    region[edges] = 255
    out[mask] = region[mask]
    return out


def inpaint_median(
    frames: Sequence[np.ndarray],
    masks: Sequence[np.ndarray],
    center: int,
) -> np.ndarray:
    """Fill masked center pixels with their temporal median background.

    For each pixel masked at the center frame, the output is the
    per-channel median over window frames where that pixel is unmasked
    (mean of the middle two when the count is even, rounded half up).
    Pixels masked in every window frame fall back to (0, 0, 0).
    """
    if len(frames) != len(masks):
        raise ParameterError(
            f"window has {len(frames)} frames but {len(masks)} masks"
        )
    if len(frames) < 1 or len(frames) % 2 == 0:
        raise ParameterError(f"window length must be odd, got {len(frames)}")
    if center != len(frames) // 2:
        raise ParameterError(
            f"center index must be the middle of the window ({len(frames) // 2}), got {center}"
        )
    for i, (f, m) in enumerate(zip(frames, masks)):
        _check_pair(f, m)
        if f.shape != frames[0].shape:
            raise ParameterError(f"frame {i} dimensions differ within the window")

    stack = np.stack([f.astype(np.float64) for f in frames])
    mask_stack = np.stack([np.asarray(m, dtype=bool) for m in masks])
    stack[mask_stack] = np.nan
    # all-NaN pixel columns are expected: they take the fallback below
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", category=RuntimeWarning)
        med = np.nanmedian(stack, axis=0)
    med = np.where(np.isnan(med), 0.0, med)
    med = np.clip(_round_half_up(med), 0, 255).astype(np.uint8)

    out = frames[center].copy()
    center_mask = mask_stack[center]
    out[center_mask] = med[center_mask]
    return out


def apply_strategy(
    params: HidingParams,
    frames: Sequence[np.ndarray],
    masks: Sequence[np.ndarray],
    index: int,
    full_masks: Optional[Sequence[np.ndarray]] = None,
) -> np.ndarray:
    """Run the configured kernel for one frame given its temporal window.

    For everything except inpaint_median the window degenerates to the
    single frame at index. The scope is resolved by the caller: masks
    here are already the pixels to hide.
    """
    frame = frames[index]
    mask = masks[index]
    if params.strategy == "none":
        return frame.copy()
    if params.strategy == "blackout":
        return apply_blackout(frame, mask)
    if params.strategy == "blur":
        return apply_blur(frame, mask, params.blur_level)
    if params.strategy == "pixelate":
        return apply_pixelate(frame, mask, params.block_size)
    if params.strategy == "contours":
        return apply_contours(frame, mask, params.canny_sigma, params.canny_low, params.canny_high)
    if params.strategy == "inpaint_median":
        radius = params.temporal_radius
        lo = index - radius
        hi = index + radius + 1
        if lo < 0 or hi > len(frames):
            raise ParameterError(
                f"window of {params.median_window} frames not available around index {index}"
            )
        return inpaint_median(list(frames[lo:hi]), list(masks[lo:hi]), radius)
    raise ParameterError(f"unknown hiding strategy {params.strategy!r}")


def resolve_scope(mask: np.ndarray, scope: str) -> np.ndarray:
    """Turn a person-foreground mask into the pixels a kernel should hide."""
    if scope == "persons":
        return mask
    if scope == "background":
        return ~mask
    if scope == "both":
        return np.ones_like(mask, dtype=bool)
    raise ParameterError(f"unknown hiding scope {scope!r}")
