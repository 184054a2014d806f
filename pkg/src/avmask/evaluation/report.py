"""Evaluation report rendering: metrics CSV plus diagnostic figures."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from avmask.errors import ParameterError, UndefinedResultError
from avmask.evaluation.pitch import PitchTrack, pitch_correlation, track_pitch
from avmask.evaluation.scores import ScoreSet, compute_eer, format_percent
from avmask.media.wavio import AudioClip


def _plot_pitch_tracks(path: Path, a: PitchTrack, b: PitchTrack) -> None:
    fig, ax = plt.subplots(figsize=(8, 3.5))
    for track, label, color in ((a, "original", "#1f77b4"), (b, "processed", "#d62728")):
        times = [i * track.hop for i in range(len(track.frames))]
        values = [f0 if f0 is not None else np.nan for f0, _ in track.frames]
        ax.plot(times, values, ".-", markersize=3, linewidth=0.8, label=label, color=color)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("f0 (Hz)")
    ax.set_title("Pitch tracks")
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _plot_score_curves(path: Path, scores: ScoreSet, eer: float, threshold: float) -> None:
    genuine = np.asarray(scores.genuine)
    impostor = np.asarray(scores.impostor)
    values = np.unique(np.concatenate([genuine, impostor]))
    ts = np.concatenate([[values[0] - 1.0], values, [values[-1] + 1.0]])
    far = [np.count_nonzero(impostor >= t) / len(impostor) for t in ts]
    frr = [np.count_nonzero(genuine < t) / len(genuine) for t in ts]

    fig, (left, right) = plt.subplots(1, 2, figsize=(10, 3.5))
    bins = np.linspace(values[0], values[-1], 30) if len(values) > 1 else 10
    left.hist(impostor, bins=bins, alpha=0.6, label="impostor", color="#d62728")
    left.hist(genuine, bins=bins, alpha=0.6, label="genuine", color="#1f77b4")
    left.axvline(threshold, color="black", linestyle="--", linewidth=1)
    left.set_title("Score distributions")
    left.set_xlabel("score")
    left.legend(loc="best")

    right.plot(ts, far, label="FAR", color="#d62728")
    right.plot(ts, frr, label="FRR", color="#1f77b4")
    right.axhline(eer, color="black", linestyle=":", linewidth=1)
    right.axvline(threshold, color="black", linestyle="--", linewidth=1)
    right.set_title(f"Error rates (EER {format_percent(eer)})")
    right.set_xlabel("threshold")
    right.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _plot_leakage(path: Path, per_frame: Sequence[float]) -> None:
    fig, ax = plt.subplots(figsize=(8, 3))
    ax.plot(range(len(per_frame)), per_frame, drawstyle="steps-mid", color="#2ca02c")
    ax.set_ylim(-0.02, 1.02)
    ax.set_xlabel("frame")
    ax.set_ylabel("leakage fraction")
    ax.set_title("Per-frame mask leakage")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_report(
    out_dir,
    original: Optional[AudioClip] = None,
    processed: Optional[AudioClip] = None,
    scores: Optional[ScoreSet] = None,
    leakage: Optional[float] = None,
    per_frame_leakage: Optional[Sequence[float]] = None,
    window_ms: float = 40.0,
    hop_ms: float = 10.0,
) -> dict:
    """Compute the metrics the inputs allow and write CSV plus figures.

    Returns {"metrics": {...}, "files": [paths]}. At least one input
    group must be supplied.
    """
    if original is None and scores is None and leakage is None and per_frame_leakage is None:
        raise ParameterError("nothing to report: supply audio, scores, or leakage data")
    if (original is None) != (processed is None):
        raise ParameterError("pitch comparison needs both original and processed audio")

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    metrics: dict[str, float] = {}
    files: list[str] = []

    if original is not None and processed is not None:
        track_a = track_pitch(original.as_mono(), window_ms, hop_ms)
        track_b = track_pitch(processed.as_mono(), window_ms, hop_ms)
        try:
            metrics["pitch_correlation"] = pitch_correlation(track_a, track_b)
        except UndefinedResultError:
            metrics["pitch_correlation"] = float("nan")
        figure = out / "pitch_tracks.png"
        _plot_pitch_tracks(figure, track_a, track_b)
        files.append(str(figure))

    if scores is not None:
        eer, threshold = compute_eer(scores)
        metrics["eer"] = eer
        metrics["eer_threshold"] = threshold
        figure = out / "score_curves.png"
        _plot_score_curves(figure, scores, eer, threshold)
        files.append(str(figure))

    if leakage is not None:
        metrics["mask_leakage"] = float(leakage)
    if per_frame_leakage is not None:
        per_frame = list(per_frame_leakage)
        if "mask_leakage" not in metrics:
            metrics["mask_leakage"] = float(np.mean(per_frame)) if per_frame else 0.0
        figure = out / "leakage.png"
        _plot_leakage(figure, per_frame)
        files.append(str(figure))

    rate_metrics = {"pitch_correlation", "eer", "mask_leakage"}
    csv_path = out / "metrics.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "value", "formatted"])
        for name, value in metrics.items():
            if not np.isfinite(value):
                formatted = "n/a"
            elif name in rate_metrics:
                formatted = format_percent(value)
            else:
                formatted = f"{value:.4f}"
            writer.writerow([name, f"{value:.6f}", formatted])
    files.append(str(csv_path))

    return {"metrics": metrics, "files": files}
