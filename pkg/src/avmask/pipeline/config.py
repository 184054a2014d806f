"""Masking configuration: schema, parsing, presets.

The JSON Schema below is the single source of truth for what a config
document may contain; the manager serves it verbatim so clients can
generate their forms from it, and validate_config enforces it here.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from typing import Optional

from jsonschema import Draft202012Validator

from avmask.errors import ConfigError, NotFoundError, ParameterError
from avmask.hiding import SCOPES, STRATEGIES, HidingParams
from avmask.overlay import OverlayStyle
from avmask.voice import McAdamsParams, PitchShiftParams, VoiceParams
from avmask.voice.strategy import VOICE_STRATEGIES

OVERLAY_KINDS = ("skeleton", "face_mesh", "holistic")

_STYLE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "color": {
            "type": "array",
            "items": {"type": "integer", "minimum": 0, "maximum": 255},
            "minItems": 3,
            "maxItems": 3,
        },
        "thickness": {"type": "integer", "minimum": 1, "maximum": 16},
        "joint_radius": {"type": "integer", "minimum": 0, "maximum": 32},
        "min_visibility": {"type": "number", "minimum": 0, "maximum": 1},
    },
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "masking-config",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "hiding": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "strategy": {"enum": list(STRATEGIES)},
                "blur_level": {"type": "integer", "minimum": 1, "maximum": 10},
                "block_size": {"type": "integer", "minimum": 1, "maximum": 256},
                "canny": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "sigma": {"type": "number", "exclusiveMinimum": 0, "maximum": 10},
                        "low_threshold": {"type": "number", "minimum": 0},
                        "high_threshold": {"type": "number", "exclusiveMinimum": 0},
                    },
                },
                "median_window": {"type": "integer", "minimum": 3, "maximum": 99},
                "scope": {"enum": list(SCOPES)},
            },
        },
        "overlays": {
            "type": "array",
            "maxItems": 8,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["kind"],
                "properties": {
                    "kind": {"enum": list(OVERLAY_KINDS)},
                    "style": _STYLE_SCHEMA,
                },
            },
        },
        "voice": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "strategy": {"enum": list(VOICE_STRATEGIES)},
                "mcadams": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "alpha": {"type": "number", "exclusiveMinimum": 0, "maximum": 2},
                        "lpc_order": {"type": "integer", "minimum": 2, "maximum": 40},
                        "frame_ms": {"type": "number", "exclusiveMinimum": 0, "maximum": 200},
                        "max_pole_radius": {
                            "type": "number",
                            "exclusiveMinimum": 0,
                            "maximum": 1,
                        },
                    },
                },
                "pitch": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "ratio": {"type": "number", "minimum": 0.5, "maximum": 2.0},
                        "window_ms": {"type": "number", "exclusiveMinimum": 0, "maximum": 200},
                        "hop_ms": {"type": "number", "exclusiveMinimum": 0, "maximum": 100},
                        "search_ms": {"type": "number", "minimum": 0, "maximum": 100},
                    },
                },
            },
        },
        "exports": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kinematics_json": {"type": "boolean"},
                "kinematics_csv": {"type": "boolean"},
            },
        },
        "detections": {"type": "string"},
        "confidence_threshold": {"type": "number", "minimum": 0, "maximum": 1},
    },
}

_validator = Draft202012Validator(CONFIG_SCHEMA)


@dataclass(frozen=True)
class OverlaySpec:
    kind: str
    style: OverlayStyle = OverlayStyle()

    def __post_init__(self):
        if self.kind not in OVERLAY_KINDS:
            raise ParameterError(f"unknown overlay kind {self.kind!r}")


@dataclass(frozen=True)
class MaskingConfig:
    hiding: HidingParams = HidingParams(strategy="none")
    overlays: tuple[OverlaySpec, ...] = ()
    voice: VoiceParams = field(default_factory=VoiceParams)
    kinematics_json: bool = False
    kinematics_csv: bool = False
    detections: Optional[str] = None
    confidence_threshold: float = 0.5

    def __post_init__(self):
        if not (0.0 <= self.confidence_threshold <= 1.0):
            raise ParameterError(
                f"confidence_threshold must be in [0, 1], got {self.confidence_threshold}"
            )

    def to_document(self) -> dict:
        doc = {
            "hiding": {
                "strategy": self.hiding.strategy,
                "blur_level": self.hiding.blur_level,
                "block_size": self.hiding.block_size,
                "canny": {
                    "sigma": self.hiding.canny_sigma,
                    "low_threshold": self.hiding.canny_low,
                    "high_threshold": self.hiding.canny_high,
                },
                "median_window": self.hiding.median_window,
                "scope": self.hiding.scope,
            },
            "overlays": [
                {
                    "kind": spec.kind,
                    "style": {
                        "color": list(spec.style.color),
                        "thickness": spec.style.thickness,
                        "joint_radius": spec.style.joint_radius,
                        "min_visibility": spec.style.min_visibility,
                    },
                }
                for spec in self.overlays
            ],
            "voice": {
                "strategy": self.voice.strategy,
                "mcadams": {
                    "alpha": self.voice.mcadams.alpha,
                    "lpc_order": self.voice.mcadams.lpc_order,
                    "frame_ms": self.voice.mcadams.frame_ms,
                    "max_pole_radius": self.voice.mcadams.max_pole_radius,
                },
                "pitch": {
                    "ratio": self.voice.pitch.ratio,
                    "window_ms": self.voice.pitch.window_ms,
                    "hop_ms": self.voice.pitch.hop_ms,
                    "search_ms": self.voice.pitch.search_ms,
                },
            },
            "exports": {
                "kinematics_json": self.kinematics_json,
                "kinematics_csv": self.kinematics_csv,
            },
            "confidence_threshold": self.confidence_threshold,
        }
        if self.detections is not None:
            doc["detections"] = self.detections
        return doc


def _error_path(error) -> str:
    parts = []
    for item in error.absolute_path:
        if isinstance(item, int):
            parts.append(f"[{item}]")
        else:
            parts.append(f".{item}" if parts else str(item))
    return "".join(parts) or "(document root)"


def validate_config(document) -> MaskingConfig:
    """Validate a config document and build the typed configuration.

    The first schema violation is reported with its field path; the
    cross-field rule low_threshold < high_threshold is checked after
    schema validation.
    """
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise ConfigError("config must be a JSON object")
    errors = sorted(_validator.iter_errors(document), key=lambda e: list(e.absolute_path))
    if errors:
        first = errors[0]
        raise ConfigError(first.message, path=_error_path(first))

    hiding_doc = document.get("hiding", {})
    canny_doc = hiding_doc.get("canny", {})
    defaults = HidingParams(strategy="none")
    try:
        hiding = HidingParams(
            strategy=hiding_doc.get("strategy", "none"),
            blur_level=hiding_doc.get("blur_level", defaults.blur_level),
            block_size=hiding_doc.get("block_size", defaults.block_size),
            canny_sigma=canny_doc.get("sigma", defaults.canny_sigma),
            canny_low=canny_doc.get("low_threshold", defaults.canny_low),
            canny_high=canny_doc.get("high_threshold", defaults.canny_high),
            median_window=hiding_doc.get("median_window", defaults.median_window),
            scope=hiding_doc.get("scope", defaults.scope),
        )
    except ParameterError as exc:
        raise ConfigError(str(exc), path="hiding") from exc

    overlays = []
    for i, spec_doc in enumerate(document.get("overlays", [])):
        style_doc = spec_doc.get("style", {})
        base = OverlayStyle()
        style = OverlayStyle(
            color=tuple(style_doc.get("color", base.color)),
            thickness=style_doc.get("thickness", base.thickness),
            joint_radius=style_doc.get("joint_radius", base.joint_radius),
            min_visibility=style_doc.get("min_visibility", base.min_visibility),
        )
        overlays.append(OverlaySpec(kind=spec_doc["kind"], style=style))

    voice_doc = document.get("voice", {})
    mcadams_doc = voice_doc.get("mcadams", {})
    pitch_doc = voice_doc.get("pitch", {})
    mc_base = McAdamsParams()
    ps_base = PitchShiftParams()
    try:
        voice = VoiceParams(
            strategy=voice_doc.get("strategy", "preserve"),
            mcadams=McAdamsParams(
                alpha=mcadams_doc.get("alpha", mc_base.alpha),
                lpc_order=mcadams_doc.get("lpc_order", mc_base.lpc_order),
                frame_ms=mcadams_doc.get("frame_ms", mc_base.frame_ms),
                max_pole_radius=mcadams_doc.get("max_pole_radius", mc_base.max_pole_radius),
            ),
            pitch=PitchShiftParams(
                ratio=pitch_doc.get("ratio", ps_base.ratio),
                window_ms=pitch_doc.get("window_ms", ps_base.window_ms),
                hop_ms=pitch_doc.get("hop_ms", ps_base.hop_ms),
                search_ms=pitch_doc.get("search_ms", ps_base.search_ms),
            ),
        )
    except ParameterError as exc:
        raise ConfigError(str(exc), path="voice") from exc

    exports_doc = document.get("exports", {})
    return MaskingConfig(
        hiding=hiding,
        overlays=tuple(overlays),
        voice=voice,
        kinematics_json=exports_doc.get("kinematics_json", False),
        kinematics_csv=exports_doc.get("kinematics_csv", False),
        detections=document.get("detections"),
        confidence_threshold=document.get("confidence_threshold", 0.5),
    )


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    document: dict

    @property
    def config(self) -> MaskingConfig:
        return validate_config(self.document)


_PRESETS = {
    "blackout-only": Preset(
        name="blackout-only",
        description="Black out every detected person and strip the audio track.",
        document={
            "hiding": {"strategy": "blackout", "scope": "persons"},
            "overlays": [],
            "voice": {"strategy": "remove"},
            "exports": {"kinematics_json": False, "kinematics_csv": False},
            "confidence_threshold": 0.5,
        },
    ),
    "skeleton-on-blackout": Preset(
        name="skeleton-on-blackout",
        description="Black out persons, draw the body skeleton on top, disguise the voice.",
        document={
            "hiding": {"strategy": "blackout", "scope": "persons"},
            "overlays": [{"kind": "skeleton", "style": {"color": [0, 255, 0]}}],
            "voice": {"strategy": "switch", "mcadams": {"alpha": 0.8}, "pitch": {"ratio": 0.9}},
            "exports": {"kinematics_json": True, "kinematics_csv": False},
            "confidence_threshold": 0.5,
        },
    ),
    "blur-faces": Preset(
        name="blur-faces",
        description="Strong Gaussian blur over detected person regions, face included; voice disguised.",
        document={
            "hiding": {"strategy": "blur", "blur_level": 7, "scope": "persons"},
            "overlays": [],
            "voice": {"strategy": "switch", "mcadams": {"alpha": 0.8}, "pitch": {"ratio": 0.9}},
            "exports": {"kinematics_json": False, "kinematics_csv": False},
            "confidence_threshold": 0.5,
        },
    ),
    "person-removal": Preset(
        name="person-removal",
        description="Replace persons with the temporal median background and strip audio.",
        document={
            "hiding": {"strategy": "inpaint_median", "median_window": 5, "scope": "persons"},
            "overlays": [],
            "voice": {"strategy": "remove"},
            "exports": {"kinematics_json": False, "kinematics_csv": False},
            "confidence_threshold": 0.5,
        },
    ),
}


def list_presets() -> list[Preset]:
    return list(_PRESETS.values())


def _deep_merge(base: dict, overrides: dict) -> dict:
    merged = copy.deepcopy(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def resolve_preset(name: str, overrides: Optional[dict] = None) -> MaskingConfig:
    """Look up a preset and apply overrides on top, re-validating the result."""
    if name not in _PRESETS:
        raise NotFoundError(f"unknown preset {name!r}")
    document = _PRESETS[name].document
    if overrides:
        document = _deep_merge(document, overrides)
    return validate_config(document)
