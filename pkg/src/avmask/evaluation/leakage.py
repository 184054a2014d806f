"""Pixel-level privacy check: how much of the person region survived."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from avmask.errors import ParameterError


def mask_leakage(
    original: Sequence[np.ndarray],
    masked: Sequence[np.ndarray],
    masks: Sequence[np.ndarray],
) -> float:
    """Fraction of mask-foreground pixels with unchanged RGB values.

    0.0 means the hiding kernel obliterated every person pixel; 1.0
    means nothing changed. A corpus with no foreground at all has
    nothing to leak and reports 0.0.
    """
    if not (len(original) == len(masked) == len(masks)):
        raise ParameterError(
            f"frame counts differ: {len(original)} original, {len(masked)} masked, "
            f"{len(masks)} masks"
        )
    foreground = 0
    unchanged = 0
    for i, (orig, out, mask) in enumerate(zip(original, masked, masks)):
        if orig.shape != out.shape:
            raise ParameterError(f"frame {i}: original {orig.shape} vs masked {out.shape}")
        if mask.shape != orig.shape[:2]:
            raise ParameterError(f"frame {i}: mask {mask.shape} vs frame {orig.shape[:2]}")
        mask = np.asarray(mask, dtype=bool)
        foreground += int(mask.sum())
        same = np.all(orig == out, axis=-1)
        unchanged += int((same & mask).sum())
    if foreground == 0:
        return 0.0
    return unchanged / foreground


def leakage_per_frame(
    original: Sequence[np.ndarray],
    masked: Sequence[np.ndarray],
    masks: Sequence[np.ndarray],
) -> list[float]:
    """Per-frame leakage fractions (frames with no foreground report 0.0)."""
    return [
        mask_leakage([o], [m], [k])
        for o, m, k in zip(original, masked, masks)
    ]
