"""Voice disguise by warping LPC pole angles.

Per short frame the spectral envelope's complex pole pairs are moved
from angle phi to phi**alpha, which shifts formants while the residual
keeps prosody. Analysis and synthesis filters run on true sample
history carried across frame boundaries, so alpha = 1 reproduces the
input to within rounding.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter, lfiltic

from avmask.errors import NumericError, ParameterError
from avmask.media.wavio import AudioClip
from avmask.voice.lpc import lpc_analyze

log = logging.getLogger(__name__)

_PASS_THROUGH = np.array([1.0])


@dataclass(frozen=True)
class McAdamsParams:
    alpha: float = 0.8
    lpc_order: int = 20
    frame_ms: float = 20.0
    max_pole_radius: float = 0.998

    def __post_init__(self):
        if self.alpha <= 0:
            raise ParameterError(f"alpha must be > 0, got {self.alpha}")
        if self.lpc_order < 2:
            raise ParameterError(f"lpc_order must be >= 2, got {self.lpc_order}")
        if self.frame_ms <= 0:
            raise ParameterError(f"frame_ms must be positive, got {self.frame_ms}")
        if not (0 < self.max_pole_radius <= 1):
            raise ParameterError(
                f"max_pole_radius must be in (0, 1], got {self.max_pole_radius}"
            )

    def frame_samples(self, sample_rate: int) -> int:
        n = int(round(self.frame_ms * sample_rate / 1000.0))
        if n <= self.lpc_order:
            raise ParameterError(
                f"{self.frame_ms} ms at {sample_rate} Hz gives {n} samples, "
                f"need more than lpc_order = {self.lpc_order}"
            )
        return n


@dataclass
class McAdamsResult:
    clip: AudioClip
    frames_processed: int
    fallback_frames: int


def warp_poles(roots: np.ndarray, alpha: float, max_radius: float) -> np.ndarray:
    """Move every conjugate pole pair from angle phi to phi**alpha.

    Real roots pass through untouched. Each warped pair is rebuilt as an
    exact conjugate pair with radius clamped to max_radius and the new
    angle clamped to [0, pi], so the set stays symmetric by
    construction.
    """
    roots = np.asarray(roots, dtype=np.complex128)
    upper = roots[np.imag(roots) > 0]
    lower = roots[np.imag(roots) < 0]
    real_roots = roots[np.imag(roots) == 0]
    if len(upper) != len(lower):
        raise NumericError(
            f"root set is not conjugate-symmetric ({len(upper)} upper vs {len(lower)} lower)"
        )
    radii = np.minimum(np.abs(upper), max_radius)
    angles = np.clip(np.angle(upper) ** alpha, 0.0, np.pi)
    warped = radii * np.exp(1j * angles)
    return np.concatenate([real_roots, warped, np.conj(warped)])


def _frame_filter_coeffs(
    frame: np.ndarray, params: McAdamsParams
) -> tuple[np.ndarray, np.ndarray, bool]:
    """Return (analysis A(z), synthesis B(z), fell_back) for one frame."""
    coeffs, _ = lpc_analyze(frame, params.lpc_order)
    if not np.any(coeffs):
        return _PASS_THROUGH, _PASS_THROUGH, False  # silence, not a failure
    a_full = np.concatenate(([1.0], coeffs))
    roots = np.roots(a_full)
    residuals = np.abs(np.polyval(a_full, roots))
    if residuals.size and residuals.max() > 1e-8:
        return _PASS_THROUGH, _PASS_THROUGH, True
    try:
        warped = warp_poles(roots, params.alpha, params.max_pole_radius)
    except NumericError:
        return _PASS_THROUGH, _PASS_THROUGH, True
    a_hat = np.atleast_1d(np.poly(warped))
    if np.iscomplexobj(a_hat):
        if np.max(np.abs(a_hat.imag)) > 1e-6:
            return _PASS_THROUGH, _PASS_THROUGH, True
        a_hat = a_hat.real
    return a_full, a_hat, False


def mcadams_run(clip: AudioClip, params: McAdamsParams = McAdamsParams()) -> McAdamsResult:
    """Anonymize a clip, reporting how many frames fell back to pass-through.

    Stereo input is downmixed to mono first; output is always mono at
    the input rate and exactly the input length.
    """
    mono = clip.as_mono()
    x = mono.samples
    frame_len = params.frame_samples(mono.sample_rate)
    order = params.lpc_order

    y = np.empty_like(x)
    # histories ordered most-recent-first, as the filter initializers expect
    x_hist = np.zeros(order)
    y_hist = np.zeros(order)
    frames = 0
    fallbacks = 0

    pos = 0
    n = len(x)
    while pos < n:
        frame = x[pos : pos + frame_len]
        if len(frame) > order:
            a_full, a_hat, fell_back = _frame_filter_coeffs(frame, params)
            frames += 1
            fallbacks += int(fell_back)
        else:
            a_full, a_hat = _PASS_THROUGH, _PASS_THROUGH

        if len(a_full) > 1:
            zi = lfiltic(a_full, [1.0], y=np.zeros(len(a_full) - 1), x=x_hist[: len(a_full) - 1])
            residual, _ = lfilter(a_full, [1.0], frame, zi=zi)
        else:
            residual = frame.copy()
        if len(a_hat) > 1:
            zo = lfiltic([1.0], a_hat, y=y_hist[: len(a_hat) - 1])
            synth, _ = lfilter([1.0], a_hat, residual, zi=zo)
        else:
            synth = residual

        y[pos : pos + len(frame)] = synth
        x_hist = np.concatenate([frame[::-1], x_hist])[:order]
        y_hist = np.concatenate([synth[::-1], y_hist])[:order]
        pos += len(frame)

    if not np.all(np.isfinite(y)):
        raise NumericError("synthesis produced non-finite samples")
    if fallbacks:
        log.warning("voice anonymization fell back on %d of %d frames", fallbacks, frames)
    out = AudioClip(sample_rate=mono.sample_rate, channels=1, samples=y)
    return McAdamsResult(clip=out, frames_processed=frames, fallback_frames=fallbacks)


def mcadams_anonymize(clip: AudioClip, params: McAdamsParams = McAdamsParams()) -> AudioClip:
    return mcadams_run(clip, params).clip
