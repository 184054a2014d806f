"""HTTP facade over the orchestrator.

Endpoints are plain sync functions; FastAPI runs them on a thread pool
and the orchestrator's lock serializes mutations. Media endpoints
honor single-span byte ranges so previews and remote workers can seek.
"""

from __future__ import annotations

import base64
import json
import re
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse

from avmask.errors import (
    ConfigError,
    ConflictError,
    FormatError,
    InputError,
    MaskingError,
    NotFoundError,
    ParameterError,
    UnknownWorkerError,
)
from avmask.hiding import STRATEGIES
from avmask.manager.core import Orchestrator
from avmask.pipeline.config import CONFIG_SCHEMA, list_presets, resolve_preset

_RANGE = re.compile(r"bytes=(\d*)-(\d*)$")


def _error_response(status: int, exc: MaskingError) -> JSONResponse:
    body = {"message": str(exc)}
    path = getattr(exc, "path", None)
    if path:
        body["path"] = path
    return JSONResponse(status_code=status, content=body)


def _file_bytes(path: Path, request: Request, media_type: str) -> Response:
    """Serve a file, honoring one bytes=a-b range if present."""
    if not path.exists():
        raise NotFoundError(f"{path.name} not available")
    size = path.stat().st_size
    header = request.headers.get("range")
    if header is None:
        return Response(
            content=path.read_bytes(),
            media_type=media_type,
            headers={"accept-ranges": "bytes", "content-length": str(size)},
        )
    match = _RANGE.match(header.strip())
    if match is None or (not match.group(1) and not match.group(2)):
        return Response(status_code=416, headers={"content-range": f"bytes */{size}"})
    if match.group(1):
        start = int(match.group(1))
        end = int(match.group(2)) if match.group(2) else size - 1
    else:
        # suffix form: last N bytes
        length = int(match.group(2))
        start = max(0, size - length)
        end = size - 1
    if start >= size or end < start:
        return Response(status_code=416, headers={"content-range": f"bytes */{size}"})
    end = min(end, size - 1)
    with open(path, "rb") as fh:
        fh.seek(start)
        payload = fh.read(end - start + 1)
    return Response(
        status_code=206,
        content=payload,
        media_type=media_type,
        headers={
            "accept-ranges": "bytes",
            "content-range": f"bytes {start}-{end}/{size}",
            "content-length": str(len(payload)),
        },
    )


def create_app(orchestrator: Orchestrator) -> FastAPI:
    app = FastAPI(title="avmask manager", docs_url=None, redoc_url=None)
    app.state.orchestrator = orchestrator

    for exc_type, status in (
        (ConfigError, 422),
        (NotFoundError, 404),
        (ConflictError, 409),
        (UnknownWorkerError, 403),
        (InputError, 400),
        (ParameterError, 400),
        (FormatError, 400),
        (MaskingError, 400),
    ):

        def _handler(request, exc, status=status):
            return _error_response(status, exc)

        app.add_exception_handler(exc_type, _handler)

    # -- jobs -------------------------------------------------------

    @app.post("/api/jobs", status_code=201)
    def submit_job(body: dict):
        config = body.get("config")
        preset = body.get("preset")
        if preset is not None:
            config = resolve_preset(preset, body.get("config_overrides")).to_document()
        if config is None:
            raise ConfigError("one of 'config' or 'preset' is required", path="config")
        video_path = body.get("video_path")
        if not video_path:
            raise InputError("'video_path' is required")
        return orchestrator.submit_job(
            video_path,
            config,
            audio_path=body.get("audio_path"),
            detections_path=body.get("detections_path"),
        )

    @app.get("/api/jobs")
    def list_jobs():
        return {"jobs": orchestrator.list_jobs()}

    @app.get("/api/jobs/{job_id}")
    def job_status(job_id: str):
        return orchestrator.job_status(job_id)

    @app.get("/api/jobs/{job_id}/output")
    def job_output(job_id: str, request: Request):
        status = orchestrator.job_status(job_id)
        if status["state"] != "done" or not status["output_ref"]:
            raise ConflictError(f"job {job_id} is {status['state']}, output not ready")
        return _file_bytes(Path(status["output_ref"]), request, "application/octet-stream")

    @app.get("/api/jobs/{job_id}/audio")
    def job_audio(job_id: str, request: Request):
        status = orchestrator.job_status(job_id)
        if status["state"] != "done":
            raise ConflictError(f"job {job_id} is {status['state']}, output not ready")
        return _file_bytes(
            orchestrator.output_dir(job_id) / "audio.wav", request, "audio/wav"
        )

    @app.get("/api/jobs/{job_id}/kinematics")
    def job_kinematics(job_id: str, request: Request, format: str = "json"):
        if format not in ("json", "csv"):
            raise ParameterError(f"format must be 'json' or 'csv', got {format!r}")
        status = orchestrator.job_status(job_id)
        if status["state"] != "done":
            raise ConflictError(f"job {job_id} is {status['state']}, output not ready")
        name = "kinematics.json" if format == "json" else "kinematics.csv"
        media = "application/json" if format == "json" else "text/csv"
        return _file_bytes(orchestrator.output_dir(job_id) / name, request, media)

    @app.get("/api/jobs/{job_id}/detections")
    def job_detections(job_id: str):
        job = orchestrator.job_record(job_id)
        if job.detections_ref is None:
            raise NotFoundError(f"job {job_id} has no detections")
        return json.loads(Path(job.detections_ref).read_text(encoding="utf-8"))

    # -- media ------------------------------------------------------

    @app.get("/api/videos/{job_id}/preview")
    def video_preview(job_id: str, request: Request):
        status = orchestrator.job_status(job_id)
        if status["state"] != "done" or not status["output_ref"]:
            raise ConflictError(f"job {job_id} is {status['state']}, preview not ready")
        return _file_bytes(Path(status["output_ref"]), request, "application/octet-stream")

    @app.get("/api/videos/{job_id}/data")
    def video_data(job_id: str, request: Request):
        job = orchestrator.job_record(job_id)
        return _file_bytes(Path(job.video_ref), request, "application/octet-stream")

    # -- workers ------------------------------------------------------

    @app.post("/api/workers/register")
    def register_worker(body: Optional[dict] = None):
        capabilities = (body or {}).get("capabilities") or list(STRATEGIES)
        return orchestrator.register_worker(capabilities)

    @app.post("/api/workers/{worker_id}/heartbeat")
    def heartbeat(worker_id: str):
        orchestrator.heartbeat(worker_id)
        return {"ok": True}

    @app.post("/api/workers/{worker_id}/claim")
    def claim(worker_id: str):
        envelope = orchestrator.claim_chunk(worker_id)
        if envelope is None:
            return {"chunk": None}
        return envelope

    @app.post("/api/chunks/{chunk_id}/result")
    def chunk_result(chunk_id: str, body: dict):
        worker_id = body.get("worker_id")
        if not worker_id:
            raise ParameterError("'worker_id' is required")
        if body.get("error") is not None:
            return orchestrator.complete_chunk(chunk_id, worker_id, error=str(body["error"]))
        result_path = body.get("result_path")
        if result_path is None and body.get("frames_b64") is not None:
            result_path = _store_uploaded_result(orchestrator, chunk_id, body)
        if result_path is None:
            return orchestrator.complete_chunk(chunk_id, worker_id)
        resolved = Path(result_path).resolve()
        results_root = (orchestrator.data_dir / "results").resolve()
        if not resolved.is_relative_to(results_root):
            raise ParameterError(f"result_path must live under {results_root}")
        return orchestrator.complete_chunk(chunk_id, worker_id, result_ref=str(resolved))

    # -- config -------------------------------------------------------

    @app.get("/api/presets")
    def presets():
        return {
            "presets": [
                {"name": p.name, "description": p.description, "config": p.document}
                for p in list_presets()
            ]
        }

    @app.get("/api/config-schema")
    def config_schema():
        return CONFIG_SCHEMA

    return app


def _store_uploaded_result(orchestrator: Orchestrator, chunk_id: str, body: dict) -> str:
    """Fallback for workers without access to the shared store."""
    chunk = orchestrator.chunk_record(chunk_id)
    result_dir = orchestrator.result_dir(chunk.job_id)
    result_dir.mkdir(parents=True, exist_ok=True)
    path = result_dir / f"{chunk_id}.rvf"
    path.write_bytes(base64.b64decode(body["frames_b64"]))
    kinematics = body.get("kinematics")
    if kinematics is not None:
        Path(str(path) + ".kin.json").write_text(json.dumps(kinematics), encoding="utf-8")
    return str(path)
