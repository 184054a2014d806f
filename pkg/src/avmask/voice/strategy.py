"""Audio track strategies: preserve, remove, or switch the voice."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from avmask.errors import InputError, ParameterError
from avmask.media.wavio import AudioClip
from avmask.voice.mcadams import McAdamsParams, mcadams_anonymize
from avmask.voice.pitch_shift import PitchShiftParams, shift_pitch

VOICE_STRATEGIES = ("preserve", "remove", "switch")


@dataclass(frozen=True)
class VoiceParams:
    strategy: str = "preserve"
    mcadams: McAdamsParams = field(default_factory=McAdamsParams)
    pitch: PitchShiftParams = field(default_factory=PitchShiftParams)

    def __post_init__(self):
        if self.strategy not in VOICE_STRATEGIES:
            raise ParameterError(f"unknown voice strategy {self.strategy!r}")


def apply_voice_strategy(
    clip: Optional[AudioClip], params: VoiceParams
) -> Optional[AudioClip]:
    """Apply the configured audio strategy.

    preserve returns the clip untouched (possibly None); remove drops
    the track; switch disguises the voice by pole warping followed by a
    pitch shift, and requires a clip.
    """
    if params.strategy == "preserve":
        return clip
    if params.strategy == "remove":
        return None
    if params.strategy == "switch":
        if clip is None:
            raise InputError("voice strategy 'switch' requires an audio track")
        disguised = mcadams_anonymize(clip, params.mcadams)
        return shift_pitch(disguised, params.pitch)
    raise ParameterError(f"unknown voice strategy {params.strategy!r}")
