"""Worker runtime: claim chunks from a manager, process, report back.

A worker prefers the shared store (reads the input video by path and
drops results next to it); when the store is not reachable it falls
back to HTTP byte-range fetches for frames and a base64 upload for
results, so remote workers need nothing but the manager URL.
"""

from __future__ import annotations

import base64
import io
import json
import logging
import os
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import httpx

from avmask.detection import parse_detections
from avmask.errors import MaskingError, ParameterError
from avmask.hiding import STRATEGIES
from avmask.media.rvf import (
    FrameBuffer,
    VideoHeader,
    arrays_to_frames,
    frame_byte_range,
    frames_to_arrays,
    read_rvf_range,
    write_rvf,
)
from avmask.pipeline.config import validate_config
from avmask.pipeline.executor import process_segment
from avmask.pipeline.kinematics import export_kinematics_json

log = logging.getLogger(__name__)

BACKOFF_CAP = 60.0


@dataclass(frozen=True)
class WorkerConfig:
    manager_url: str
    capabilities: tuple = STRATEGIES
    # local floor; the manager's advertised interval takes precedence
    poll_interval: float = 1.0
    parallelism: int = 1

    def __post_init__(self):
        if self.poll_interval < 1.0:
            raise ParameterError(
                f"poll_interval must be >= 1 second, got {self.poll_interval}"
            )
        if self.parallelism < 1:
            raise ParameterError(f"parallelism must be >= 1, got {self.parallelism}")
        if not self.capabilities:
            raise ParameterError("capabilities must be non-empty")


def _fetch_frames(client: httpx.Client, envelope: dict) -> list:
    """Input frames for the chunk, by path when shared, else by range."""
    chunk = envelope["chunk"]
    start, end = chunk["input_start"], chunk["input_end"]
    video_path = envelope.get("video_path")
    if video_path and os.path.exists(video_path):
        _, frames = read_rvf_range(video_path, start, end)
        return frames
    meta = envelope["video"]
    header = VideoHeader(
        width=meta["width"],
        height=meta["height"],
        frame_count=meta["frame_count"],
        fps_num=meta["fps_num"],
        fps_den=meta["fps_den"],
    )
    lo, hi = frame_byte_range(header, start, end)
    response = client.get(
        envelope["video_url"], headers={"range": f"bytes={lo}-{hi - 1}"}
    )
    response.raise_for_status()
    payload = response.content
    if response.status_code != 206:
        payload = payload[lo:hi]
    size = header.frame_bytes
    frames = []
    for i in range(end - start):
        block = payload[i * size : (i + 1) * size]
        frames.append(FrameBuffer(header.width, header.height, start + i, block))
    return frames


def _fetch_detections(client: httpx.Client, envelope: dict):
    path = envelope.get("detections_path")
    if path and os.path.exists(path):
        return parse_detections(Path(path).read_text(encoding="utf-8"))
    url = envelope.get("detections_url")
    if url:
        response = client.get(url)
        response.raise_for_status()
        return parse_detections(response.json())
    return None


def execute_chunk(client: httpx.Client, envelope: dict) -> tuple[bytes, Optional[dict]]:
    """Process one chunk; returns the core-range RVF bytes and the
    kinematics partial (None when no export was requested)."""
    chunk = envelope["chunk"]
    config = validate_config(envelope["config"])
    frames = _fetch_frames(client, envelope)
    detections = _fetch_detections(client, envelope)
    result = process_segment(
        frames_to_arrays(frames),
        detections,
        config,
        start_index=chunk["input_start"],
        core=(chunk["core_start"], chunk["core_end"]),
        total_frames=envelope["total_frames"],
    )
    meta = envelope["video"]
    out_header = VideoHeader(
        width=meta["width"],
        height=meta["height"],
        frame_count=chunk["core_end"] - chunk["core_start"],
        fps_num=meta["fps_num"],
        fps_den=meta["fps_den"],
    )
    buffer = io.BytesIO()
    write_rvf(out_header, arrays_to_frames(result.frames, chunk["core_start"]), buffer)
    partial = None
    if config.kinematics_json or config.kinematics_csv:
        partial = export_kinematics_json(result.kinematics)
        partial["skips"] = result.skipped_overlays
    return buffer.getvalue(), partial


class _Session:
    """One registered identity against one manager."""

    def __init__(self, config: WorkerConfig, client: httpx.Client) -> None:
        self.config = config
        self.client = client
        self.worker_id: Optional[str] = None
        self.poll_interval = config.poll_interval

    def register(self) -> None:
        response = self.client.post(
            "/api/workers/register",
            json={"capabilities": list(self.config.capabilities)},
        )
        response.raise_for_status()
        body = response.json()
        self.worker_id = body["worker_id"]
        advertised = float(body.get("poll_interval", self.config.poll_interval))
        self.poll_interval = advertised if advertised > 0 else self.config.poll_interval
        log.info("registered as %s (poll every %.2fs)", self.worker_id, self.poll_interval)

    def heartbeat(self) -> None:
        response = self.client.post(f"/api/workers/{self.worker_id}/heartbeat")
        if response.status_code == 403:
            log.warning("manager no longer knows %s; re-registering", self.worker_id)
            self.register()
            return
        response.raise_for_status()

    def claim(self) -> Optional[dict]:
        response = self.client.post(f"/api/workers/{self.worker_id}/claim")
        if response.status_code == 403:
            self.register()
            return None
        response.raise_for_status()
        body = response.json()
        if body.get("chunk") is None:
            return None
        return body

    def report(self, chunk_id: str, payload: dict) -> None:
        payload = dict(payload, worker_id=self.worker_id)
        response = self.client.post(f"/api/chunks/{chunk_id}/result", json=payload)
        if response.status_code == 409:
            log.warning("result for %s rejected as stale; dropping", chunk_id)
            return
        response.raise_for_status()


def _deliver(session: _Session, envelope: dict, rvf_bytes: bytes, partial: Optional[dict]) -> None:
    chunk_id = envelope["chunk"]["id"]
    result_dir = envelope.get("result_dir")
    if result_dir and os.path.isdir(result_dir) and os.access(result_dir, os.W_OK):
        result_path = Path(result_dir) / f"{chunk_id}.rvf"
        result_path.write_bytes(rvf_bytes)
        if partial is not None:
            Path(str(result_path) + ".kin.json").write_text(
                json.dumps(partial), encoding="utf-8"
            )
        session.report(chunk_id, {"result_path": str(result_path)})
    else:
        body = {"frames_b64": base64.b64encode(rvf_bytes).decode("ascii")}
        if partial is not None:
            body["kinematics"] = partial
        session.report(chunk_id, body)


def run_worker(
    config: WorkerConfig,
    stop_event=None,
    max_chunks: Optional[int] = None,
) -> int:
    """Service loop: heartbeat, claim, process, report, repeat.

    Chunk-level failures are reported to the manager and the loop goes
    on; manager unavailability backs off exponentially up to a minute.
    Returns the number of chunks completed (useful under max_chunks).
    """
    completed = 0
    backoff = 1.0
    with httpx.Client(base_url=config.manager_url, timeout=120.0) as client:
        session = _Session(config, client)
        while not (stop_event is not None and stop_event.is_set()):
            try:
                if session.worker_id is None:
                    session.register()
                session.heartbeat()
                envelope = session.claim()
                backoff = 1.0
                if envelope is None:
                    if max_chunks is not None and completed >= max_chunks:
                        break
                    _sleep(session.poll_interval, stop_event)
                    continue
                chunk_id = envelope["chunk"]["id"]
                log.info("processing chunk %s", chunk_id)
                try:
                    rvf_bytes, partial = execute_chunk(client, envelope)
                    _deliver(session, envelope, rvf_bytes, partial)
                    completed += 1
                except (MaskingError, httpx.HTTPStatusError) as exc:
                    log.error("chunk %s failed: %s", chunk_id, exc)
                    session.report(chunk_id, {"error": str(exc)})
                if max_chunks is not None and completed >= max_chunks:
                    break
            except httpx.HTTPError as exc:
                log.warning("manager unreachable (%s); retrying in %.0fs", exc, backoff)
                _sleep(backoff, stop_event)
                backoff = min(backoff * 2.0, BACKOFF_CAP)
    return completed


def _sleep(seconds: float, stop_event) -> None:
    if stop_event is not None:
        stop_event.wait(seconds)
    else:
        time.sleep(seconds)
