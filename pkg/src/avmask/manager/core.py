"""The job orchestrator: intake, assignment, failure recovery, merging.

Layout under data_dir:
    journal.ndjson / snapshot.json   event log and fold cache
    inputs/{job}/video.rvf ...       copies of submitted media
    results/{job}/                   chunk outputs dropped by workers
    outputs/{job}/output.rvf ...     merged deliverables

Every mutation goes through _commit: append the event, fold it into
the in-memory state. Requests serialize on one lock; the merge step
runs outside it since it only reads finished chunk files.
"""

from __future__ import annotations

import json
import logging
import os
import shutil
import threading
import time
import uuid
from pathlib import Path
from typing import Optional

from avmask.detection import parse_detections
from avmask.errors import (
    ConflictError,
    FormatError,
    InputError,
    NotFoundError,
    ParameterError,
    UnknownWorkerError,
)
from avmask.hiding import STRATEGIES
from avmask.manager.journal import Journal
from avmask.manager.model import Chunk, Job, ManagerState
from avmask.manager.planner import DEFAULT_CORE_SIZE, auto_overlap, plan_chunks
from avmask.media.rvf import HEADER_SIZE, pack_header, read_header_file
from avmask.media.wavio import read_wav_file, write_wav_file
from avmask.pipeline.config import validate_config
from avmask.pipeline.kinematics import (
    export_kinematics_csv,
    export_kinematics_json,
    import_kinematics_json,
)
from avmask.voice.strategy import apply_voice_strategy

log = logging.getLogger(__name__)

DEFAULT_HEARTBEAT_TIMEOUT = 30.0
DEFAULT_MAX_ATTEMPTS = 3


def _env_heartbeat_timeout() -> float:
    raw = os.environ.get("MASK_HEARTBEAT_TIMEOUT_SECS")
    if raw is None:
        return DEFAULT_HEARTBEAT_TIMEOUT
    try:
        value = float(raw)
    except ValueError:
        raise ParameterError(f"MASK_HEARTBEAT_TIMEOUT_SECS must be a number, got {raw!r}")
    if value <= 0:
        raise ParameterError(f"MASK_HEARTBEAT_TIMEOUT_SECS must be positive, got {value}")
    return value


class Orchestrator:
    def __init__(
        self,
        data_dir,
        heartbeat_timeout: Optional[float] = None,
        max_attempts: int = DEFAULT_MAX_ATTEMPTS,
        core_size: int = DEFAULT_CORE_SIZE,
        poll_interval: float = 1.0,
    ) -> None:
        if max_attempts < 1:
            raise ParameterError(f"max_attempts must be >= 1, got {max_attempts}")
        if core_size < 1:
            raise ParameterError(f"core_size must be >= 1, got {core_size}")
        if poll_interval <= 0:
            raise ParameterError(f"poll_interval must be positive, got {poll_interval}")
        self.data_dir = Path(data_dir)
        self.heartbeat_timeout = (
            _env_heartbeat_timeout() if heartbeat_timeout is None else float(heartbeat_timeout)
        )
        if self.heartbeat_timeout <= 0:
            raise ParameterError(f"heartbeat_timeout must be positive, got {self.heartbeat_timeout}")
        self.max_attempts = max_attempts
        self.core_size = core_size
        self.poll_interval = poll_interval
        self._lock = threading.RLock()
        self._journal = Journal(self.data_dir)
        self._state = self._journal.load()
        self._merging_now: set[str] = set()
        for sub in ("inputs", "results", "outputs"):
            (self.data_dir / sub).mkdir(exist_ok=True)

    def close(self) -> None:
        with self._lock:
            self._journal.write_snapshot(self._state)
            self._journal.close()

    # -- internals ----------------------------------------------------

    def _commit(self, event: dict) -> None:
        with self._lock:
            self._journal.append(event)
            self._state.apply(event)
            self._journal.maybe_snapshot(self._state)

    def state_dict(self) -> dict:
        with self._lock:
            return self._state.state_dict()

    def replay_state_dict(self) -> dict:
        """Re-fold the full journal from disk, bypassing the snapshot."""
        return self._journal.replay().state_dict()

    def input_dir(self, job_id: str) -> Path:
        return self.data_dir / "inputs" / job_id

    def result_dir(self, job_id: str) -> Path:
        return self.data_dir / "results" / job_id

    def output_dir(self, job_id: str) -> Path:
        return self.data_dir / "outputs" / job_id

    def _job(self, job_id: str) -> Job:
        job = self._state.jobs.get(job_id)
        if job is None:
            raise NotFoundError(f"no such job {job_id!r}")
        return job

    def job_record(self, job_id: str) -> Job:
        with self._lock:
            return self._job(job_id)

    def chunk_record(self, chunk_id: str) -> Chunk:
        with self._lock:
            chunk = self._state.chunks.get(chunk_id)
            if chunk is None:
                raise NotFoundError(f"no such chunk {chunk_id!r}")
            return chunk

    # -- job intake ---------------------------------------------------

    def submit_job(
        self,
        video_path,
        config_document,
        audio_path=None,
        detections_path=None,
    ) -> dict:
        """Validate everything up front, then persist the job atomically.

        Nothing is journaled until the config parses, the media opens,
        and the input copies land, so a rejected submission leaves no
        trace.
        """
        config = validate_config(config_document)
        try:
            header = read_header_file(video_path)
        except OSError as exc:
            raise InputError(f"cannot read video {video_path}: {exc}")

        if detections_path is None and config.detections:
            detections_path = config.detections
        if detections_path is not None:
            try:
                timeline = parse_detections(Path(detections_path).read_text(encoding="utf-8"))
            except OSError as exc:
                raise InputError(f"cannot read detections {detections_path}: {exc}")
            if timeline.width != header.width or timeline.height != header.height:
                raise InputError(
                    f"detections are for {timeline.width}x{timeline.height}, "
                    f"video is {header.width}x{header.height}"
                )

        if config.voice.strategy == "switch" and audio_path is None:
            raise InputError("voice strategy 'switch' requires an audio track")
        if audio_path is not None:
            try:
                read_wav_file(audio_path)
            except OSError as exc:
                raise InputError(f"cannot read audio {audio_path}: {exc}")

        job_id = "j-" + uuid.uuid4().hex[:12]
        in_dir = self.input_dir(job_id)
        in_dir.mkdir(parents=True)
        video_ref = str(in_dir / "video.rvf")
        shutil.copyfile(video_path, video_ref)
        audio_ref = None
        if audio_path is not None:
            audio_ref = str(in_dir / "audio.wav")
            shutil.copyfile(audio_path, audio_ref)
        detections_ref = None
        if detections_path is not None:
            detections_ref = str(in_dir / "detections.json")
            shutil.copyfile(detections_path, detections_ref)

        overlap = auto_overlap(config.hiding)
        plans = plan_chunks(header.frame_count, self.core_size, overlap)
        now = time.time()
        chunk_docs = []
        for index, plan in enumerate(plans):
            chunk_docs.append(
                Chunk(
                    id=f"{job_id}-c{index:04d}",
                    job_id=job_id,
                    index=index,
                    core_start=plan.core_start,
                    core_end=plan.core_end,
                    input_start=plan.input_start,
                    input_end=plan.input_end,
                ).to_dict()
            )
        job_doc = Job(
            id=job_id,
            video_ref=video_ref,
            audio_ref=audio_ref,
            detections_ref=detections_ref,
            config_doc=config.to_document(),
            state="queued" if chunk_docs else "merging",
            chunk_ids=[doc["id"] for doc in chunk_docs],
            created_at=now,
            updated_at=now,
            total_frames=header.frame_count,
        ).to_dict()
        self._commit({"type": "job_submitted", "job": job_doc, "chunks": chunk_docs, "at": now})
        if not chunk_docs:
            self._maybe_merge(job_id)
        return self.job_status(job_id)

    # -- workers ------------------------------------------------------

    def register_worker(self, capabilities) -> dict:
        caps = tuple(capabilities)
        if not caps:
            raise ParameterError("capabilities must be non-empty")
        for cap in caps:
            if cap not in STRATEGIES:
                raise ParameterError(f"unknown capability {cap!r}")
        worker_id = "w-" + uuid.uuid4().hex[:12]
        self._commit(
            {
                "type": "worker_registered",
                "worker_id": worker_id,
                "capabilities": list(caps),
                "at": time.time(),
            }
        )
        return {"worker_id": worker_id, "poll_interval": self.poll_interval}

    def heartbeat(self, worker_id: str) -> None:
        with self._lock:
            if worker_id not in self._state.workers:
                raise UnknownWorkerError(f"worker {worker_id!r} is not registered")
            self._commit({"type": "heartbeat", "worker_id": worker_id, "at": time.time()})
            self.reap_stale()

    def reap_stale(self, now: Optional[float] = None) -> list[str]:
        """Mark silent workers lost and recycle their chunks.

        Produces a single event describing every consequence, so replay
        needs no clock. Returns the requeued chunk ids.
        """
        if now is None:
            now = time.time()
        with self._lock:
            stale = [
                w.id
                for w in self._state.workers.values()
                if w.state != "lost" and now - w.last_heartbeat > self.heartbeat_timeout
            ]
            if not stale:
                return []
            stale_set = set(stale)
            chunk_items = []
            failed_jobs = []
            for chunk in self._state.chunks.values():
                if chunk.state != "assigned" or chunk.assigned_to not in stale_set:
                    continue
                next_attempt = chunk.attempts + 1
                requeued = next_attempt <= self.max_attempts
                chunk_items.append(
                    {"chunk_id": chunk.id, "attempts": next_attempt, "requeued": requeued}
                )
                if not requeued and chunk.job_id not in failed_jobs:
                    failed_jobs.append(chunk.job_id)
            chunk_items.sort(key=lambda item: item["chunk_id"])
            self._commit(
                {
                    "type": "workers_reaped",
                    "workers": sorted(stale),
                    "chunks": chunk_items,
                    "failed_jobs": sorted(failed_jobs),
                    "at": now,
                }
            )
            log.warning(
                "reaped %d stale worker(s); requeued %d chunk(s)",
                len(stale),
                sum(1 for item in chunk_items if item["requeued"]),
            )
            return [item["chunk_id"] for item in chunk_items if item["requeued"]]

    # -- chunk lifecycle ----------------------------------------------

    def claim_chunk(self, worker_id: str) -> Optional[dict]:
        with self._lock:
            self.reap_stale()
            worker = self._state.workers.get(worker_id)
            if worker is None:
                raise UnknownWorkerError(f"worker {worker_id!r} is not registered")
            if worker.state == "lost":
                raise UnknownWorkerError(f"worker {worker_id!r} was marked lost; re-register")
            jobs = sorted(
                (j for j in self._state.jobs.values() if j.state in ("queued", "running")),
                key=lambda j: (j.created_at, j.id),
            )
            for job in jobs:
                if job.config_doc["hiding"]["strategy"] not in worker.capabilities:
                    continue
                for chunk_id in job.chunk_ids:
                    chunk = self._state.chunks[chunk_id]
                    if chunk.state != "pending":
                        continue
                    self._commit(
                        {
                            "type": "chunk_claimed",
                            "worker_id": worker_id,
                            "chunk_id": chunk.id,
                            "at": time.time(),
                        }
                    )
                    return self._claim_envelope(job, self._state.chunks[chunk.id])
            return None

    def _claim_envelope(self, job: Job, chunk: Chunk) -> dict:
        header = read_header_file(job.video_ref)
        result_dir = self.result_dir(job.id)
        result_dir.mkdir(parents=True, exist_ok=True)
        return {
            "chunk": chunk.to_dict(),
            "job_id": job.id,
            "config": job.config_doc,
            "total_frames": job.total_frames,
            "video": {
                "width": header.width,
                "height": header.height,
                "frame_count": header.frame_count,
                "fps_num": header.fps_num,
                "fps_den": header.fps_den,
            },
            "video_path": job.video_ref,
            "video_url": f"/api/videos/{job.id}/data",
            "detections_path": job.detections_ref,
            "detections_url": f"/api/jobs/{job.id}/detections" if job.detections_ref else None,
            "result_dir": str(result_dir),
        }

    def complete_chunk(
        self,
        chunk_id: str,
        worker_id: str,
        result_ref: Optional[str] = None,
        error: Optional[str] = None,
    ) -> dict:
        with self._lock:
            chunk = self._state.chunks.get(chunk_id)
            if chunk is None:
                raise NotFoundError(f"no such chunk {chunk_id!r}")
            if chunk.state == "done":
                if chunk.assigned_to == worker_id:
                    return {"status": "ignored"}
                raise ConflictError(f"chunk {chunk_id} already completed by another worker")
            if chunk.state != "assigned" or chunk.assigned_to != worker_id:
                raise ConflictError(f"chunk {chunk_id} is not assigned to {worker_id}")
            if error is None and result_ref is None:
                error = "missing result payload"
            now = time.time()
            if error is not None:
                next_attempt = chunk.attempts + 1
                requeue = next_attempt <= self.max_attempts
                self._commit(
                    {
                        "type": "chunk_failed",
                        "chunk_id": chunk_id,
                        "worker_id": worker_id,
                        "error": error,
                        "attempts": next_attempt,
                        "requeue": requeue,
                        "at": now,
                    }
                )
                return {"status": "requeued" if requeue else "failed"}
            self._commit(
                {
                    "type": "chunk_completed",
                    "chunk_id": chunk_id,
                    "worker_id": worker_id,
                    "result_ref": result_ref,
                    "at": now,
                }
            )
            job_id = chunk.job_id
            merge_ready = self._state.jobs[job_id].state == "merging"
        if merge_ready:
            self._maybe_merge(job_id)
        return {"status": "accepted"}

    # -- merging ------------------------------------------------------

    def resume(self) -> None:
        """Finish merges interrupted by a restart."""
        with self._lock:
            pending = [j.id for j in self._state.jobs.values() if j.state == "merging"]
        for job_id in pending:
            self._maybe_merge(job_id)

    def _maybe_merge(self, job_id: str) -> None:
        with self._lock:
            job = self._state.jobs.get(job_id)
            if job is None or job.state != "merging" or job_id in self._merging_now:
                return
            self._merging_now.add(job_id)
        try:
            output_ref = self.merge_results(job_id)
            self._commit(
                {
                    "type": "job_merged",
                    "job_id": job_id,
                    "output_ref": output_ref,
                    "at": time.time(),
                }
            )
        except Exception as exc:
            log.exception("merge failed for job %s", job_id)
            self._commit(
                {
                    "type": "job_failed",
                    "job_id": job_id,
                    "error": f"merge failed: {exc}",
                    "at": time.time(),
                }
            )
        finally:
            with self._lock:
                self._merging_now.discard(job_id)

    def merge_results(self, job_id: str) -> str:
        """Concatenate core frames in order, run the voice strategy, export.

        Byte-level: each chunk result is an RVF holding exactly its core
        frames, so the merge verifies headers and splices payloads.
        Writes to a temp name and renames, so rerunning is harmless.
        """
        with self._lock:
            job = self._job(job_id)
            chunks = sorted(
                (self._state.chunks[cid] for cid in job.chunk_ids), key=lambda c: c.index
            )
        for chunk in chunks:
            if chunk.state != "done" or not chunk.result_ref:
                raise ConflictError(f"chunk {chunk.id} has no result to merge")

        in_header = read_header_file(job.video_ref)
        config = validate_config(job.config_doc)
        out_dir = self.output_dir(job_id)
        out_dir.mkdir(parents=True, exist_ok=True)
        out_path = out_dir / "output.rvf"
        tmp_path = out_dir / "output.rvf.tmp"

        total = 0
        try:
            with open(tmp_path, "wb") as dest:
                dest.write(pack_header(in_header))
                for chunk in chunks:
                    part = read_header_file(chunk.result_ref)
                    core = chunk.core_end - chunk.core_start
                    if (part.width, part.height) != (in_header.width, in_header.height):
                        raise FormatError(
                            f"chunk {chunk.id} result is {part.width}x{part.height}, "
                            f"expected {in_header.width}x{in_header.height}"
                        )
                    if part.frame_count != core:
                        raise FormatError(
                            f"chunk {chunk.id} result has {part.frame_count} frames, "
                            f"expected {core}"
                        )
                    remaining = part.frame_count * part.frame_bytes
                    with open(chunk.result_ref, "rb") as src:
                        src.seek(HEADER_SIZE)
                        while remaining:
                            block = src.read(min(remaining, 1 << 20))
                            if not block:
                                raise FormatError(f"chunk {chunk.id} result is truncated")
                            dest.write(block)
                            remaining -= len(block)
                    total += part.frame_count
            if total != job.total_frames:
                raise FormatError(
                    f"merged {total} frames for job {job_id}, expected {job.total_frames}"
                )
        except Exception:
            tmp_path.unlink(missing_ok=True)
            raise
        os.replace(tmp_path, out_path)

        if job.audio_ref:
            clip = read_wav_file(job.audio_ref)
            processed = apply_voice_strategy(clip, config.voice)
            if processed is not None:
                write_wav_file(out_dir / "audio.wav", processed)

        if config.kinematics_json or config.kinematics_csv:
            records = []
            skips = []
            for chunk in chunks:
                partial_path = Path(chunk.result_ref + ".kin.json")
                if not partial_path.exists():
                    continue
                partial = json.loads(partial_path.read_text(encoding="utf-8"))
                records.extend(import_kinematics_json(partial))
                skips.extend(partial.get("skips", []))
            records.sort(key=lambda record: record.index)
            meta = {
                "width": in_header.width,
                "height": in_header.height,
                "frame_count": in_header.frame_count,
                "fps": [in_header.fps_num, in_header.fps_den],
            }
            if config.kinematics_json:
                doc = export_kinematics_json(records, video_meta=meta)
                if skips:
                    doc["skipped_overlays"] = skips
                (out_dir / "kinematics.json").write_text(
                    json.dumps(doc, indent=2), encoding="utf-8"
                )
            if config.kinematics_csv:
                (out_dir / "kinematics.csv").write_text(
                    export_kinematics_csv(records), encoding="utf-8"
                )
        return str(out_path)

    # -- views ----------------------------------------------------------

    def job_status(self, job_id: str) -> dict:
        with self._lock:
            job = self._job(job_id)
            chunks = [self._state.chunks[cid] for cid in job.chunk_ids]
            if job.state == "done":
                progress = 1.0
            elif chunks:
                progress = sum(1 for c in chunks if c.state == "done") / len(chunks)
            else:
                progress = 0.0
            return {
                "id": job.id,
                "state": job.state,
                "progress": progress,
                "created_at": job.created_at,
                "updated_at": job.updated_at,
                "total_frames": job.total_frames,
                "error": job.error,
                "output_ref": job.output_ref,
                "has_audio": job.audio_ref is not None,
                "config": job.config_doc,
                "chunks": [
                    {
                        "id": c.id,
                        "index": c.index,
                        "state": c.state,
                        "attempts": c.attempts,
                        "assigned_to": c.assigned_to,
                        "core_start": c.core_start,
                        "core_end": c.core_end,
                    }
                    for c in chunks
                ],
            }

    def list_jobs(self) -> list[dict]:
        with self._lock:
            ids = [
                j.id
                for j in sorted(self._state.jobs.values(), key=lambda j: (j.created_at, j.id))
            ]
        return [self.job_status(job_id) for job_id in ids]
