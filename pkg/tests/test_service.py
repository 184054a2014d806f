"""HTTP layer tests: status-code mapping, byte ranges, worker protocol.

Everything runs against an in-process app over a real orchestrator; the
only doubles are the requests themselves.
"""

from __future__ import annotations

import base64
import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from avmask.hiding import STRATEGIES
from avmask.manager.core import Orchestrator
from avmask.manager.service import create_app
from avmask.media.wavio import write_wav_file
from avmask.pipeline.config import CONFIG_SCHEMA, resolve_preset
from avmask.worker import execute_chunk
from avmask.detection import emit_detections
from tests.conftest import bgsub_timeline, moving_box_frames, sine_clip, write_video


BLACKOUT = {"hiding": {"strategy": "blackout"}, "confidence_threshold": 0.0}


@pytest.fixture()
def env(tmp_path):
    frames = moving_box_frames(seed=23, width=40, height=30, count=12)
    video = tmp_path / "input.rvf"
    write_video(video, frames, fps=(25, 1))
    detections = tmp_path / "detections.json"
    detections.write_text(json.dumps(emit_detections(bgsub_timeline(frames))))
    audio = tmp_path / "voice.wav"
    write_wav_file(audio, sine_clip(220.0, seconds=0.3))
    orch = Orchestrator(tmp_path / "data", heartbeat_timeout=30.0, core_size=5)
    client = TestClient(create_app(orch))
    yield {
        "client": client,
        "orch": orch,
        "video": video,
        "detections": detections,
        "audio": audio,
    }
    orch.close()


def _submit(env, config=BLACKOUT, **extra):
    body = {"video_path": str(env["video"]), "config": config}
    body.update(extra)
    response = env["client"].post("/api/jobs", json=body)
    assert response.status_code == 201, response.text
    return response.json()


def _register(env, capabilities=None):
    body = {} if capabilities is None else {"capabilities": capabilities}
    response = env["client"].post("/api/workers/register", json=body)
    assert response.status_code == 200
    return response.json()["worker_id"]


def _drain(env, worker_id, via="path", count=None, limit=20):
    """Claim over HTTP and process inline until the queue runs dry,
    or for exactly `count` chunks when given."""
    client = env["client"]
    done = 0
    for _ in range(limit):
        if count is not None and done == count:
            return
        envelope = client.post(f"/api/workers/{worker_id}/claim").json()
        if envelope.get("chunk") is None:
            if count is None:
                return
            raise AssertionError("queue ran dry early")
        rvf_bytes, partial = execute_chunk(None, envelope)
        chunk_id = envelope["chunk"]["id"]
        if via == "path":
            ref = Path(envelope["result_dir"]) / f"{chunk_id}.rvf"
            ref.write_bytes(rvf_bytes)
            if partial is not None:
                Path(str(ref) + ".kin.json").write_text(json.dumps(partial))
            body = {"worker_id": worker_id, "result_path": str(ref)}
        else:
            body = {
                "worker_id": worker_id,
                "frames_b64": base64.b64encode(rvf_bytes).decode("ascii"),
            }
            if partial is not None:
                body["kinematics"] = partial
        response = client.post(f"/api/chunks/{chunk_id}/result", json=body)
        assert response.status_code == 200, response.text
        assert response.json()["status"] == "accepted"
        done += 1
    raise AssertionError("drain limit hit")


# -- job submission ---------------------------------------------------------


def test_submit_returns_201_with_queued_status(env):
    status = _submit(env, detections_path=str(env["detections"]))
    assert status["state"] == "queued"
    assert status["total_frames"] == 12
    assert status["progress"] == 0.0


def test_submit_with_preset_resolves_config(env):
    body = {
        "video_path": str(env["video"]),
        "audio_path": str(env["audio"]),  # preset switches the voice
        "preset": "blur-faces",
        "config_overrides": {"hiding": {"blur_level": 3}},
    }
    response = env["client"].post("/api/jobs", json=body)
    assert response.status_code == 201
    expected = resolve_preset("blur-faces", {"hiding": {"blur_level": 3}}).to_document()
    assert response.json()["config"] == expected
    assert response.json()["config"]["hiding"]["blur_level"] == 3


def test_submit_unknown_preset_is_404(env):
    response = env["client"].post(
        "/api/jobs", json={"video_path": str(env["video"]), "preset": "nope"}
    )
    assert response.status_code == 404
    assert "nope" in response.json()["message"]


def test_submit_without_config_or_preset_is_422(env):
    response = env["client"].post("/api/jobs", json={"video_path": str(env["video"])})
    assert response.status_code == 422
    assert response.json()["path"] == "config"


def test_submit_invalid_config_is_422_with_field_path(env):
    response = env["client"].post(
        "/api/jobs",
        json={
            "video_path": str(env["video"]),
            "config": {"hiding": {"strategy": "blur", "blur_level": 11}},
        },
    )
    assert response.status_code == 422
    body = response.json()
    assert body["path"] == "hiding.blur_level"
    assert "message" in body


def test_submit_missing_video_path_is_400(env):
    response = env["client"].post("/api/jobs", json={"config": BLACKOUT})
    assert response.status_code == 400


def test_submit_nonexistent_video_is_400(env):
    response = env["client"].post(
        "/api/jobs", json={"video_path": str(env["video"]) + ".gone", "config": BLACKOUT}
    )
    assert response.status_code == 400


# -- job queries --------------------------------------------------------------


def test_list_jobs_contains_submitted(env):
    status = _submit(env)
    listing = env["client"].get("/api/jobs").json()
    assert [j["id"] for j in listing["jobs"]] == [status["id"]]


def test_job_status_unknown_id_is_404(env):
    response = env["client"].get("/api/jobs/ghost")
    assert response.status_code == 404
    assert "message" in response.json()


def test_output_conflicts_until_done_then_serves_bytes(env):
    status = _submit(env, detections_path=str(env["detections"]))
    job_id = status["id"]
    assert env["client"].get(f"/api/jobs/{job_id}/output").status_code == 409
    worker = _register(env, ["blackout"])
    _drain(env, worker)
    done = env["client"].get(f"/api/jobs/{job_id}").json()
    assert done["state"] == "done"
    response = env["client"].get(f"/api/jobs/{job_id}/output")
    assert response.status_code == 200
    assert response.headers["accept-ranges"] == "bytes"
    assert response.content == Path(done["output_ref"]).read_bytes()


# -- byte ranges --------------------------------------------------------------


@pytest.fixture()
def done_job(env):
    status = _submit(env, detections_path=str(env["detections"]))
    worker = _register(env)
    _drain(env, worker)
    output = Path(env["client"].get(f"/api/jobs/{status['id']}").json()["output_ref"])
    return {"id": status["id"], "bytes": output.read_bytes()}


def test_range_prefix(env, done_job):
    response = env["client"].get(
        f"/api/jobs/{done_job['id']}/output", headers={"range": "bytes=0-9"}
    )
    assert response.status_code == 206
    assert response.content == done_job["bytes"][:10]
    size = len(done_job["bytes"])
    assert response.headers["content-range"] == f"bytes 0-9/{size}"


def test_range_open_ended(env, done_job):
    response = env["client"].get(
        f"/api/jobs/{done_job['id']}/output", headers={"range": "bytes=24-"}
    )
    assert response.status_code == 206
    assert response.content == done_job["bytes"][24:]


def test_range_suffix(env, done_job):
    response = env["client"].get(
        f"/api/jobs/{done_job['id']}/output", headers={"range": "bytes=-7"}
    )
    assert response.status_code == 206
    assert response.content == done_job["bytes"][-7:]


def test_range_end_clamped_to_file_size(env, done_job):
    size = len(done_job["bytes"])
    response = env["client"].get(
        f"/api/jobs/{done_job['id']}/output", headers={"range": f"bytes=0-{size * 10}"}
    )
    assert response.status_code == 206
    assert response.content == done_job["bytes"]
    assert response.headers["content-range"] == f"bytes 0-{size - 1}/{size}"


def test_range_start_past_end_is_416(env, done_job):
    size = len(done_job["bytes"])
    response = env["client"].get(
        f"/api/jobs/{done_job['id']}/output", headers={"range": f"bytes={size}-"}
    )
    assert response.status_code == 416
    assert response.headers["content-range"] == f"bytes */{size}"


def test_range_malformed_is_416(env, done_job):
    response = env["client"].get(
        f"/api/jobs/{done_job['id']}/output", headers={"range": "bytes=-"}
    )
    assert response.status_code == 416


def test_preview_matches_output(env, done_job):
    preview = env["client"].get(f"/api/videos/{done_job['id']}/preview")
    assert preview.status_code == 200
    assert preview.content == done_job["bytes"]


def test_video_data_serves_stored_input(env):
    status = _submit(env)
    stored = Path(env["orch"].job_record(status["id"]).video_ref).read_bytes()
    response = env["client"].get(f"/api/videos/{status['id']}/data")
    assert response.status_code == 200
    assert response.content == stored
    ranged = env["client"].get(
        f"/api/videos/{status['id']}/data", headers={"range": "bytes=0-23"}
    )
    assert ranged.status_code == 206
    assert ranged.content == stored[:24]


# -- side outputs --------------------------------------------------------------


def test_audio_endpoint(env):
    config = {
        "hiding": {"strategy": "blackout"},
        "confidence_threshold": 0.0,
        "voice": {"strategy": "preserve"},
    }
    status = _submit(env, config=config, audio_path=str(env["audio"]))
    job_id = status["id"]
    assert env["client"].get(f"/api/jobs/{job_id}/audio").status_code == 409
    worker = _register(env)
    _drain(env, worker)
    response = env["client"].get(f"/api/jobs/{job_id}/audio")
    assert response.status_code == 200
    expected = env["orch"].output_dir(job_id) / "audio.wav"
    assert response.content == expected.read_bytes()


def test_audio_404_when_job_has_none(env):
    status = _submit(env)
    worker = _register(env)
    _drain(env, worker)
    response = env["client"].get(f"/api/jobs/{status['id']}/audio")
    assert response.status_code == 404


def test_kinematics_json_and_csv(env):
    config = {
        "hiding": {"strategy": "blackout"},
        "confidence_threshold": 0.0,
        "exports": {"kinematics_json": True, "kinematics_csv": True},
    }
    status = _submit(env, config=config, detections_path=str(env["detections"]))
    worker = _register(env)
    _drain(env, worker)
    job_id = status["id"]
    as_json = env["client"].get(f"/api/jobs/{job_id}/kinematics")
    assert as_json.status_code == 200
    doc = as_json.json()
    assert doc["video"]["frame_count"] == 12
    as_csv = env["client"].get(f"/api/jobs/{job_id}/kinematics", params={"format": "csv"})
    assert as_csv.status_code == 200
    header = as_csv.text.splitlines()[0]
    assert header == "frame,person_id,block,point_index,x,y,z,visibility"


def test_kinematics_bad_format_is_400(env):
    status = _submit(env)
    response = env["client"].get(
        f"/api/jobs/{status['id']}/kinematics", params={"format": "xml"}
    )
    assert response.status_code == 400


def test_detections_endpoint_roundtrip(env):
    status = _submit(env, detections_path=str(env["detections"]))
    response = env["client"].get(f"/api/jobs/{status['id']}/detections")
    assert response.status_code == 200
    assert response.json() == json.loads(env["detections"].read_text())


def test_detections_404_when_absent(env):
    status = _submit(env)
    response = env["client"].get(f"/api/jobs/{status['id']}/detections")
    assert response.status_code == 404


# -- worker protocol ------------------------------------------------------------


def test_register_returns_id_and_poll_interval(env):
    response = env["client"].post("/api/workers/register", json={})
    assert response.status_code == 200
    body = response.json()
    assert body["worker_id"]
    assert body["poll_interval"] == pytest.approx(1.0)


def test_register_without_capabilities_gets_them_all(env):
    # empty body means "can run anything": such a worker may claim any chunk
    _submit(env, config={"hiding": {"strategy": "inpaint_median"}, "confidence_threshold": 0.0})
    worker = _register(env)
    envelope = env["client"].post(f"/api/workers/{worker}/claim").json()
    assert envelope["chunk"] is not None


def test_register_unknown_capability_is_400(env):
    response = env["client"].post(
        "/api/workers/register", json={"capabilities": ["explode"]}
    )
    assert response.status_code == 400
    assert "explode" in response.json()["message"]


def test_heartbeat_ok_and_unknown_worker_403(env):
    worker = _register(env)
    assert env["client"].post(f"/api/workers/{worker}/heartbeat").json() == {"ok": True}
    response = env["client"].post("/api/workers/ghost/heartbeat")
    assert response.status_code == 403


def test_claim_with_nothing_pending_returns_null_chunk(env):
    worker = _register(env)
    response = env["client"].post(f"/api/workers/{worker}/claim")
    assert response.status_code == 200
    assert response.json() == {"chunk": None}


def test_claim_envelope_carries_fetch_urls(env):
    status = _submit(env, detections_path=str(env["detections"]))
    worker = _register(env)
    envelope = env["client"].post(f"/api/workers/{worker}/claim").json()
    assert envelope["video_url"] == f"/api/videos/{status['id']}/data"
    assert envelope["detections_url"] == f"/api/jobs/{status['id']}/detections"
    assert envelope["video"] == {
        "width": 40,
        "height": 30,
        "frame_count": 12,
        "fps_num": 25,
        "fps_den": 1,
    }
    assert envelope["chunk"]["state"] == "assigned"


def test_claim_unknown_worker_is_403(env):
    _submit(env)
    response = env["client"].post("/api/workers/ghost/claim")
    assert response.status_code == 403


# -- result reporting -----------------------------------------------------------


def test_result_path_outside_results_root_rejected(env, tmp_path):
    _submit(env)
    worker = _register(env)
    envelope = env["client"].post(f"/api/workers/{worker}/claim").json()
    chunk_id = envelope["chunk"]["id"]
    evil = tmp_path / "evil.rvf"
    evil.write_bytes(b"nope")
    response = env["client"].post(
        f"/api/chunks/{chunk_id}/result",
        json={"worker_id": worker, "result_path": str(evil)},
    )
    assert response.status_code == 400
    # chunk stays assigned, not completed
    assert env["orch"].chunk_record(chunk_id).state == "assigned"


def test_result_path_traversal_rejected(env):
    _submit(env)
    worker = _register(env)
    envelope = env["client"].post(f"/api/workers/{worker}/claim").json()
    chunk_id = envelope["chunk"]["id"]
    sneaky = Path(envelope["result_dir"]) / ".." / ".." / ".." / "etc" / "passwd"
    response = env["client"].post(
        f"/api/chunks/{chunk_id}/result",
        json={"worker_id": worker, "result_path": str(sneaky)},
    )
    assert response.status_code == 400


def test_result_without_worker_id_is_400(env):
    _submit(env)
    worker = _register(env)
    envelope = env["client"].post(f"/api/workers/{worker}/claim").json()
    response = env["client"].post(
        f"/api/chunks/{envelope['chunk']['id']}/result", json={}
    )
    assert response.status_code == 400


def test_result_unknown_chunk_is_404(env):
    worker = _register(env)
    response = env["client"].post(
        "/api/chunks/ghost/result", json={"worker_id": worker, "error": "boom"}
    )
    assert response.status_code == 404


def test_result_from_wrong_worker_is_409(env):
    _submit(env)
    first = _register(env)
    second = _register(env)
    envelope = env["client"].post(f"/api/workers/{first}/claim").json()
    response = env["client"].post(
        f"/api/chunks/{envelope['chunk']['id']}/result",
        json={"worker_id": second, "error": "boom"},
    )
    assert response.status_code == 409


def test_error_report_requeues(env):
    status = _submit(env)
    worker = _register(env)
    envelope = env["client"].post(f"/api/workers/{worker}/claim").json()
    response = env["client"].post(
        f"/api/chunks/{envelope['chunk']['id']}/result",
        json={"worker_id": worker, "error": "synthetic failure"},
    )
    assert response.status_code == 200
    assert response.json()["status"] == "requeued"
    chunks = env["client"].get(f"/api/jobs/{status['id']}").json()["chunks"]
    failed = [c for c in chunks if c["id"] == envelope["chunk"]["id"]][0]
    assert failed["state"] == "pending"
    assert failed["attempts"] == 2  # claim counted one, the failure another


def test_result_with_no_payload_counts_as_failure(env):
    _submit(env)
    worker = _register(env)
    envelope = env["client"].post(f"/api/workers/{worker}/claim").json()
    response = env["client"].post(
        f"/api/chunks/{envelope['chunk']['id']}/result", json={"worker_id": worker}
    )
    assert response.status_code == 200
    assert response.json()["status"] == "requeued"


def test_b64_upload_completes_job_with_kinematics(env):
    config = {
        "hiding": {"strategy": "blackout"},
        "confidence_threshold": 0.0,
        "exports": {"kinematics_json": True, "kinematics_csv": False},
    }
    status = _submit(env, config=config, detections_path=str(env["detections"]))
    worker = _register(env)
    _drain(env, worker, via="b64")
    job_id = status["id"]
    done = env["client"].get(f"/api/jobs/{job_id}").json()
    assert done["state"] == "done"
    doc = env["client"].get(f"/api/jobs/{job_id}/kinematics").json()
    assert [f["index"] for f in doc["frames"]] == list(range(12))


def test_b64_and_path_delivery_produce_identical_output(env):
    first = _submit(env, detections_path=str(env["detections"]))
    second = _submit(env, detections_path=str(env["detections"]))
    worker = _register(env)
    _drain(env, worker, via="path", count=3)
    _drain(env, worker, via="b64", count=3)
    a = env["client"].get(f"/api/jobs/{first['id']}/output")
    b = env["client"].get(f"/api/jobs/{second['id']}/output")
    assert a.content == b.content


# -- config surface ---------------------------------------------------------------


def test_presets_endpoint_lists_all_four(env):
    body = env["client"].get("/api/presets").json()
    names = [p["name"] for p in body["presets"]]
    assert names == ["blackout-only", "skeleton-on-blackout", "blur-faces", "person-removal"]
    for preset in body["presets"]:
        assert preset["description"]
        assert "hiding" in preset["config"]


def test_config_schema_endpoint_serves_the_schema(env):
    response = env["client"].get("/api/config-schema")
    assert response.status_code == 200
    assert response.json() == CONFIG_SCHEMA


def test_all_strategies_are_valid_capabilities(env):
    response = env["client"].post(
        "/api/workers/register", json={"capabilities": list(STRATEGIES)}
    )
    assert response.status_code == 200
