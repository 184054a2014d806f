"""Event-sourced state for the job manager.

All state lives in ManagerState and changes only through apply(),
a pure fold over journal events. Every decision that depends on the
clock (heartbeats, reaping) is recorded in the event itself, so
replaying the journal reproduces the state byte for byte.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from typing import Optional

from avmask.errors import FormatError

JOB_STATES = ("queued", "running", "merging", "done", "failed")
CHUNK_STATES = ("pending", "assigned", "done", "failed")
WORKER_STATES = ("idle", "busy", "lost")


@dataclass
class Job:
    id: str
    video_ref: str
    audio_ref: Optional[str]
    detections_ref: Optional[str]
    config_doc: dict
    state: str
    chunk_ids: list[str]
    created_at: float
    updated_at: float
    total_frames: int
    error: Optional[str] = None
    output_ref: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "video_ref": self.video_ref,
            "audio_ref": self.audio_ref,
            "detections_ref": self.detections_ref,
            "config_doc": copy.deepcopy(self.config_doc),
            "state": self.state,
            "chunk_ids": list(self.chunk_ids),
            "created_at": self.created_at,
            "updated_at": self.updated_at,
            "total_frames": self.total_frames,
            "error": self.error,
            "output_ref": self.output_ref,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Job":
        return cls(
            id=doc["id"],
            video_ref=doc["video_ref"],
            audio_ref=doc["audio_ref"],
            detections_ref=doc["detections_ref"],
            config_doc=copy.deepcopy(doc["config_doc"]),
            state=doc["state"],
            chunk_ids=list(doc["chunk_ids"]),
            created_at=doc["created_at"],
            updated_at=doc["updated_at"],
            total_frames=doc["total_frames"],
            error=doc.get("error"),
            output_ref=doc.get("output_ref"),
        )


@dataclass
class Chunk:
    id: str
    job_id: str
    index: int
    core_start: int
    core_end: int
    input_start: int
    input_end: int
    state: str = "pending"
    # Kept after completion so a worker re-posting the same result is
    # recognized and ignored rather than treated as a conflict.
    assigned_to: Optional[str] = None
    attempts: int = 0
    result_ref: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "job_id": self.job_id,
            "index": self.index,
            "core_start": self.core_start,
            "core_end": self.core_end,
            "input_start": self.input_start,
            "input_end": self.input_end,
            "state": self.state,
            "assigned_to": self.assigned_to,
            "attempts": self.attempts,
            "result_ref": self.result_ref,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Chunk":
        return cls(**doc)


@dataclass
class WorkerRecord:
    id: str
    capabilities: tuple
    last_heartbeat: float
    state: str = "idle"

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "capabilities": list(self.capabilities),
            "last_heartbeat": self.last_heartbeat,
            "state": self.state,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "WorkerRecord":
        return cls(
            id=doc["id"],
            capabilities=tuple(doc["capabilities"]),
            last_heartbeat=doc["last_heartbeat"],
            state=doc["state"],
        )


class ManagerState:
    """Fold target for journal events."""

    def __init__(self) -> None:
        self.jobs: dict[str, Job] = {}
        self.chunks: dict[str, Chunk] = {}
        self.workers: dict[str, WorkerRecord] = {}

    # -- event fold -------------------------------------------------

    def apply(self, event: dict) -> None:
        kind = event.get("type")
        handler = getattr(self, f"_on_{kind}", None)
        if handler is None:
            raise FormatError(f"unknown event type {kind!r}")
        handler(event)

    def _on_job_submitted(self, event: dict) -> None:
        job = Job.from_dict(event["job"])
        self.jobs[job.id] = job
        for doc in event["chunks"]:
            chunk = Chunk.from_dict(doc)
            self.chunks[chunk.id] = chunk

    def _on_worker_registered(self, event: dict) -> None:
        self.workers[event["worker_id"]] = WorkerRecord(
            id=event["worker_id"],
            capabilities=tuple(event["capabilities"]),
            last_heartbeat=event["at"],
        )

    def _on_heartbeat(self, event: dict) -> None:
        worker = self.workers.get(event["worker_id"])
        if worker is None:
            return
        worker.last_heartbeat = event["at"]
        if worker.state == "lost":
            worker.state = "idle"

    def _on_chunk_claimed(self, event: dict) -> None:
        chunk = self.chunks[event["chunk_id"]]
        chunk.state = "assigned"
        chunk.assigned_to = event["worker_id"]
        # first assignment is attempt 1; requeues pre-set the next number
        chunk.attempts = max(chunk.attempts, 1)
        worker = self.workers.get(event["worker_id"])
        if worker is not None:
            worker.state = "busy"
            worker.last_heartbeat = event["at"]
        job = self.jobs[chunk.job_id]
        if job.state == "queued":
            job.state = "running"
            job.updated_at = event["at"]

    def _on_chunk_completed(self, event: dict) -> None:
        chunk = self.chunks[event["chunk_id"]]
        chunk.state = "done"
        chunk.result_ref = event["result_ref"]
        worker = self.workers.get(event["worker_id"])
        if worker is not None and worker.state == "busy":
            worker.state = "idle"
        job = self.jobs[chunk.job_id]
        job.updated_at = event["at"]
        if all(self.chunks[cid].state == "done" for cid in job.chunk_ids):
            if job.state not in ("done", "failed"):
                job.state = "merging"

    def _on_chunk_failed(self, event: dict) -> None:
        chunk = self.chunks[event["chunk_id"]]
        worker = self.workers.get(event["worker_id"]) if event.get("worker_id") else None
        if worker is not None and worker.state == "busy":
            worker.state = "idle"
        job = self.jobs[chunk.job_id]
        job.updated_at = event["at"]
        if event["requeue"]:
            chunk.state = "pending"
            chunk.assigned_to = None
            chunk.attempts = event["attempts"]
        else:
            chunk.state = "failed"
            job.state = "failed"
            job.error = event.get("error") or "chunk failed"

    def _on_workers_reaped(self, event: dict) -> None:
        for worker_id in event["workers"]:
            worker = self.workers.get(worker_id)
            if worker is not None:
                worker.state = "lost"
        for item in event["chunks"]:
            chunk = self.chunks[item["chunk_id"]]
            if item["requeued"]:
                chunk.state = "pending"
                chunk.assigned_to = None
                chunk.attempts = item["attempts"]
            else:
                chunk.state = "failed"
        for job_id in event["failed_jobs"]:
            job = self.jobs[job_id]
            job.state = "failed"
            job.error = "too many attempts after worker loss"
            job.updated_at = event["at"]

    def _on_job_merged(self, event: dict) -> None:
        job = self.jobs[event["job_id"]]
        job.state = "done"
        job.output_ref = event["output_ref"]
        job.updated_at = event["at"]

    def _on_job_failed(self, event: dict) -> None:
        job = self.jobs[event["job_id"]]
        job.state = "failed"
        job.error = event.get("error") or "job failed"
        job.updated_at = event["at"]

    # -- serialization ----------------------------------------------

    def state_dict(self) -> dict:
        """Canonical JSON-ready snapshot, stable under replay."""
        return {
            "jobs": {jid: job.to_dict() for jid, job in sorted(self.jobs.items())},
            "chunks": {cid: c.to_dict() for cid, c in sorted(self.chunks.items())},
            "workers": {wid: w.to_dict() for wid, w in sorted(self.workers.items())},
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ManagerState":
        state = cls()
        for jid, jdoc in doc.get("jobs", {}).items():
            state.jobs[jid] = Job.from_dict(jdoc)
        for cid, cdoc in doc.get("chunks", {}).items():
            state.chunks[cid] = Chunk.from_dict(cdoc)
        for wid, wdoc in doc.get("workers", {}).items():
            state.workers[wid] = WorkerRecord.from_dict(wdoc)
        return state
