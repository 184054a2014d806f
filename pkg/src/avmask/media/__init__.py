"""Bit-exact native media formats plus the external-transcoder bridge."""

from avmask.media.rvf import (
    FrameBuffer,
    VideoHeader,
    read_rvf,
    read_rvf_file,
    write_rvf,
    write_rvf_file,
)
from avmask.media.wavio import AudioClip, read_wav, read_wav_file, write_wav, write_wav_file

__all__ = [
    "AudioClip",
    "FrameBuffer",
    "VideoHeader",
    "read_rvf",
    "read_rvf_file",
    "read_wav",
    "read_wav_file",
    "write_rvf",
    "write_rvf_file",
    "write_wav",
    "write_wav_file",
]
