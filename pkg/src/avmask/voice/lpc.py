"""Linear predictive analysis via autocorrelation and Levinson-Durbin."""

from __future__ import annotations

import numpy as np

from avmask.errors import ParameterError


def autocorrelation(frame: np.ndarray, order: int) -> np.ndarray:
    """Biased autocorrelation r[0..order] (positive semidefinite by construction)."""
    x = np.asarray(frame, dtype=np.float64)
    n = len(x)
    r = np.empty(order + 1)
    for k in range(order + 1):
        r[k] = np.dot(x[: n - k], x[k:]) / n
    return r


def lpc_analyze(frame: np.ndarray, order: int) -> tuple[np.ndarray, float]:
    """Fit A(z) = 1 + a1 z^-1 + ... + ap z^-p minimizing prediction error.

    Returns (a[1..p], gain) where gain is the residual RMS per sample.
    A zero-energy frame returns all-zero coefficients, which makes both
    the analysis and synthesis filters pass-throughs.
    """
    x = np.asarray(frame, dtype=np.float64)
    if order < 1:
        raise ParameterError(f"order must be >= 1, got {order}")
    if len(x) <= order:
        raise ParameterError(f"frame of {len(x)} samples cannot fit order {order}")
    r = autocorrelation(x, order)
    if r[0] <= 0.0:
        return np.zeros(order), 0.0

    a = np.zeros(order + 1)
    a[0] = 1.0
    error = r[0]
    for i in range(1, order + 1):
        acc = r[i] + np.dot(a[1:i], r[i - 1 : 0 : -1])
        if error <= r[0] * 1e-14:
            # numerically exhausted: remaining coefficients stay zero
            break
        k = -acc / error
        prev = a[1:i].copy()
        a[1:i] = prev + k * prev[::-1]
        a[i] = k
        error *= 1.0 - k * k
        if error < 0.0:
            error = 0.0
    gain = float(np.sqrt(max(error, 0.0)))
    return a[1:], gain
