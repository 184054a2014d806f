"""Masking configuration and the segment executor."""

from avmask.pipeline.config import (
    CONFIG_SCHEMA,
    MaskingConfig,
    OverlaySpec,
    Preset,
    list_presets,
    resolve_preset,
    validate_config,
)
from avmask.pipeline.executor import SegmentResult, process_segment
from avmask.pipeline.kinematics import (
    FrameKinematics,
    PersonKinematics,
    export_kinematics,
    import_kinematics_json,
)

__all__ = [
    "CONFIG_SCHEMA",
    "MaskingConfig",
    "OverlaySpec",
    "Preset",
    "list_presets",
    "resolve_preset",
    "validate_config",
    "SegmentResult",
    "process_segment",
    "FrameKinematics",
    "PersonKinematics",
    "export_kinematics",
    "import_kinematics_json",
]
