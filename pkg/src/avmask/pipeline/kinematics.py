"""Landmark data export: motion records as JSON or CSV."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Optional

from avmask.errors import ParameterError
from avmask.overlay import LandmarkFrame

_BLOCK_ORDER = ("pose", "face", "left_hand", "right_hand")


@dataclass
class PersonKinematics:
    person_id: str
    landmarks: LandmarkFrame


@dataclass
class FrameKinematics:
    index: int
    persons: list[PersonKinematics] = field(default_factory=list)


def export_kinematics_json(
    records: list[FrameKinematics], video_meta: Optional[dict] = None
) -> dict:
    frames = []
    for record in records:
        persons = []
        for person in record.persons:
            entry = {"id": person.person_id}
            entry.update(person.landmarks.to_document())
            persons.append(entry)
        frames.append({"index": record.index, "persons": persons})
    return {"video": video_meta or {}, "frames": frames}


def import_kinematics_json(document) -> list[FrameKinematics]:
    if isinstance(document, (str, bytes)):
        document = json.loads(document)
    records = []
    for frame_doc in document["frames"]:
        persons = [
            PersonKinematics(
                person_id=p["id"],
                landmarks=LandmarkFrame.from_document(p),
            )
            for p in frame_doc["persons"]
        ]
        records.append(FrameKinematics(index=frame_doc["index"], persons=persons))
    return records


def export_kinematics_csv(records: list[FrameKinematics]) -> str:
    """One row per landmark point: frame,person_id,block,point_index,x,y,z,visibility."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["frame", "person_id", "block", "point_index", "x", "y", "z", "visibility"])
    for record in records:
        for person in record.persons:
            for block_name in _BLOCK_ORDER:
                block = getattr(person.landmarks, block_name)
                if block is None:
                    continue
                for point_index, row in enumerate(block):
                    writer.writerow(
                        [
                            record.index,
                            person.person_id,
                            block_name,
                            point_index,
                            repr(float(row[0])),
                            repr(float(row[1])),
                            repr(float(row[2])),
                            repr(float(row[3])),
                        ]
                    )
    return buffer.getvalue()


def export_kinematics(
    records: list[FrameKinematics], format: str, video_meta: Optional[dict] = None
):
    """Render records as a JSON document (dict) or CSV text."""
    if format == "json":
        return export_kinematics_json(records, video_meta)
    if format == "csv":
        return export_kinematics_csv(records)
    raise ParameterError(f"unknown kinematics format {format!r}")
