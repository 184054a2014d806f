"""Privacy and utility metrics for masked media."""

from avmask.evaluation.leakage import mask_leakage
from avmask.evaluation.pitch import PitchTrack, pitch_correlation, track_pitch
from avmask.evaluation.scores import ScoreSet, compute_eer, format_percent, parse_score_file
from avmask.evaluation.text import agreement_score, compute_wer, tokenize

__all__ = [
    "mask_leakage",
    "PitchTrack",
    "pitch_correlation",
    "track_pitch",
    "ScoreSet",
    "compute_eer",
    "format_percent",
    "parse_score_file",
    "agreement_score",
    "compute_wer",
    "tokenize",
]
