"""Token-level transcript metrics."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from avmask.errors import ParameterError


def tokenize(text: str) -> list[str]:
    """Whitespace split, case-folded."""
    return text.casefold().split()


def compute_wer(reference: Sequence[str], hypothesis: Sequence[str]) -> float:
    """Word error rate: minimal (S + D + I) / len(reference), unit costs."""
    if len(reference) == 0:
        raise ParameterError("reference must be non-empty")
    n, m = len(reference), len(hypothesis)
    dist = np.zeros((n + 1, m + 1), dtype=np.int64)
    dist[:, 0] = np.arange(n + 1)
    dist[0, :] = np.arange(m + 1)
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            sub = dist[i - 1, j - 1] + (reference[i - 1] != hypothesis[j - 1])
            dist[i, j] = min(sub, dist[i - 1, j] + 1, dist[i, j - 1] + 1)
    return float(dist[n, m]) / n


def agreement_score(labels_a: Sequence, labels_b: Sequence) -> float:
    """Fraction of positions where both label sequences agree."""
    if len(labels_a) != len(labels_b):
        raise ParameterError(
            f"label sequences differ in length: {len(labels_a)} vs {len(labels_b)}"
        )
    if len(labels_a) == 0:
        raise ParameterError("label sequences must be non-empty")
    equal = sum(1 for a, b in zip(labels_a, labels_b) if a == b)
    return equal / len(labels_a)
