"""Equal error rate over genuine/impostor similarity scores."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from avmask.errors import FormatError, ParameterError


@dataclass
class ScoreSet:
    genuine: list[float]
    impostor: list[float]

    def __post_init__(self):
        if not self.genuine or not self.impostor:
            raise ParameterError("both genuine and impostor score lists must be non-empty")
        for name, values in (("genuine", self.genuine), ("impostor", self.impostor)):
            arr = np.asarray(values, dtype=np.float64)
            if not np.all(np.isfinite(arr)):
                raise ParameterError(f"{name} scores must be finite")


def _operating_point(
    threshold: float, genuine: np.ndarray, impostor: np.ndarray
) -> tuple[float, float]:
    far = float(np.count_nonzero(impostor >= threshold)) / len(impostor)
    frr = float(np.count_nonzero(genuine < threshold)) / len(genuine)
    return far, frr


def compute_eer(scores: ScoreSet) -> tuple[float, float]:
    """Return (eer, threshold) where false accept and false reject rates meet.

    Thresholds sweep every distinct score value plus sentinels past both
    ends; the crossing of FAR - FRR (non-increasing in the threshold) is
    linearly interpolated between the adjacent operating points where
    the sign changes.
    """
    genuine = np.asarray(scores.genuine, dtype=np.float64)
    impostor = np.asarray(scores.impostor, dtype=np.float64)
    values = np.unique(np.concatenate([genuine, impostor]))
    thresholds = np.concatenate([[values[0] - 1.0], values, [values[-1] + 1.0]])

    prev_t = thresholds[0]
    prev_far, prev_frr = _operating_point(prev_t, genuine, impostor)
    for t in thresholds[1:]:
        far, frr = _operating_point(t, genuine, impostor)
        prev_diff = prev_far - prev_frr
        diff = far - frr
        if prev_diff >= 0.0 and diff <= 0.0:
            if prev_diff == diff:  # both exactly at the crossing
                return (prev_far + prev_frr) / 2.0, float(prev_t)
            s = prev_diff / (prev_diff - diff)
            eer = prev_far + s * (far - prev_far)
            threshold = prev_t + s * (t - prev_t)
            return float(eer), float(threshold)
        prev_t, prev_far, prev_frr = t, far, frr
    raise ParameterError("no crossing found; scores are not finite")  # unreachable


def format_percent(value: float) -> str:
    """Render a rate in reporting style: 0.476 becomes '47.60%'."""
    return f"{value * 100.0:.2f}%"


def parse_score_file(text: str) -> ScoreSet:
    """Parse lines of '<label> <score>' with labels genuine/impostor."""
    genuine: list[float] = []
    impostor: list[float] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise FormatError(f"line {lineno}: expected '<label> <score>', got {line!r}")
        label, raw = parts
        try:
            score = float(raw)
        except ValueError:
            raise FormatError(f"line {lineno}: score {raw!r} is not a number") from None
        if label == "genuine":
            genuine.append(score)
        elif label == "impostor":
            impostor.append(score)
        else:
            raise FormatError(
                f"line {lineno}: label must be 'genuine' or 'impostor', got {label!r}"
            )
    return ScoreSet(genuine=genuine, impostor=impostor)
