"""Audio de-identification: keep, drop, or parametrically disguise the voice."""

from avmask.voice.lpc import lpc_analyze
from avmask.voice.mcadams import McAdamsParams, McAdamsResult, mcadams_anonymize, mcadams_run
from avmask.voice.pitch_shift import (
    PitchShiftParams,
    PitchShiftResult,
    shift_pitch,
    shift_pitch_run,
)
from avmask.voice.strategy import VOICE_STRATEGIES, VoiceParams, apply_voice_strategy

__all__ = [
    "lpc_analyze",
    "McAdamsParams",
    "McAdamsResult",
    "mcadams_anonymize",
    "mcadams_run",
    "PitchShiftParams",
    "PitchShiftResult",
    "shift_pitch",
    "shift_pitch_run",
    "VOICE_STRATEGIES",
    "VoiceParams",
    "apply_voice_strategy",
]
