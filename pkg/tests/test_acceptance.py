"""Release gate suite.

One test per promised behavior, each at its stated tolerance, so a
verbose run reads as a pass/fail checklist. Tolerances here are the
contract; the unit suites probe the same code harder but these are the
lines that must hold before shipping.
"""

from __future__ import annotations

import importlib
import json
import os
import pkgutil
import re
import signal
import socket
import subprocess
import sys
import time
from pathlib import Path

import httpx
import numpy as np
import pytest
from click.testing import CliRunner
from scipy.signal import lfilter, welch

import avmask
from avmask.cli import main as cli_main
from avmask.detection import DetectionTimeline, bgsub_detect, emit_detections, rasterize_region
from avmask.evaluation.leakage import mask_leakage
from avmask.evaluation.pitch import PitchTrack, pitch_correlation, track_pitch
from avmask.evaluation.scores import ScoreSet, compute_eer, format_percent
from avmask.evaluation.text import compute_wer
from avmask.hiding import HidingParams, apply_strategy
from avmask.manager.core import Orchestrator
from avmask.manager.planner import plan_chunks
from avmask.media.rvf import VideoHeader, arrays_to_frames, frames_to_arrays, read_rvf_file, write_rvf_file
from avmask.media.wavio import AudioClip, read_wav_file, write_wav_file
from avmask.pipeline.config import validate_config
from avmask.pipeline.executor import process_segment
from avmask.pipeline.kinematics import (
    export_kinematics_csv,
    export_kinematics_json,
    import_kinematics_json,
)
from avmask.voice.mcadams import McAdamsParams, mcadams_anonymize
from avmask.voice.pitch_shift import PitchShiftParams, shift_pitch
from tests.conftest import (
    moving_box_frames,
    bgsub_timeline,
    random_frames,
    sine_clip,
    snr_db,
    speech_like_clip,
    write_video,
)
from tests.test_evaluation import eer_midpoint_oracle
from tests.test_kinematics import _random_records, _records_equal

MASKED_KERNELS = ("blackout", "blur", "pixelate", "contours", "inpaint_median")
STATELESS_KERNELS = ("blackout", "blur", "pixelate", "contours")


def _kernel_config(strategy: str) -> dict:
    doc = {"hiding": {"strategy": strategy}, "confidence_threshold": 0.0}
    if strategy == "inpaint_median":
        doc["hiding"]["median_window"] = 5
    return doc


def _union_masks(timeline: DetectionTimeline, frame_count: int):
    masks = []
    for index in range(frame_count):
        mask = np.zeros((timeline.height, timeline.width), dtype=bool)
        for person in timeline.persons_at(index):
            mask |= rasterize_region(person, timeline.width, timeline.height)
        masks.append(mask)
    return masks


# ---------------------------------------------------------------------------
# 1. transparent configuration changes nothing, and quickly


def test_identity_pipeline_is_byte_lossless_and_fast(tmp_path):
    frames = random_frames(seed=100, width=64, height=48, count=100)
    video_in = tmp_path / "in.rvf"
    write_video(video_in, frames)
    audio_in = tmp_path / "in.wav"
    write_wav_file(audio_in, speech_like_clip(seed=100, seconds=1.0))
    config_path = tmp_path / "config.json"
    config_path.write_text(
        json.dumps(
            {
                "hiding": {"strategy": "none"},
                "overlays": [],
                "voice": {"strategy": "preserve"},
            }
        )
    )
    video_out = tmp_path / "out.rvf"
    audio_out = tmp_path / "out.wav"
    started = time.monotonic()
    result = CliRunner().invoke(
        cli_main,
        [
            "run",
            "--input", str(video_in),
            "--config", str(config_path),
            "--output", str(video_out),
            "--audio", str(audio_in),
            "--audio-out", str(audio_out),
        ],
    )
    elapsed = time.monotonic() - started
    assert result.exit_code == 0, result.output
    assert video_out.read_bytes() == video_in.read_bytes()
    source = read_wav_file(audio_in)
    kept = read_wav_file(audio_out)
    assert kept.sample_rate == source.sample_rate
    assert np.array_equal(kept.samples, source.samples)
    assert elapsed < 5.0, f"transparent run took {elapsed:.2f}s"


# ---------------------------------------------------------------------------
# 2. blackout leaves nothing of any detected person


def test_blackout_leakage_is_exactly_zero_across_corpus():
    for seed in range(20):
        frames = moving_box_frames(seed=seed)
        timeline = bgsub_timeline(frames)
        config = validate_config(_kernel_config("blackout"))
        result = process_segment(frames, timeline, config)
        masks = _union_masks(timeline, len(frames))
        assert sum(m.any() for m in masks) > 0, f"corpus video {seed} detected nothing"
        leakage = mask_leakage(frames, result.frames, masks)
        assert leakage == 0.0, f"video {seed} leaked {leakage}"


# ---------------------------------------------------------------------------
# 3. kernels touch only what the mask covers


def test_kernel_identities_hold():
    frames = random_frames(seed=101, width=40, height=30, count=6)
    empty_timeline = DetectionTimeline(width=40, height=30, fps=(25, 1), frames=[])
    for strategy in MASKED_KERNELS:
        config = validate_config(_kernel_config(strategy))
        result = process_segment(frames, empty_timeline, config)
        for got, want in zip(result.frames, frames):
            assert np.array_equal(got, want), f"{strategy} altered unmasked video"

    # blur of a constant field stays within one count per channel
    constant = [np.full((24, 32, 3), (77, 130, 200), dtype=np.uint8)] * 3
    full = [np.ones((24, 32), dtype=bool)] * 3
    for level in (1, 5, 10):
        params = HidingParams(strategy="blur", blur_level=level)
        blurred = apply_strategy(params, constant, full, index=1)
        diff = np.abs(blurred.astype(np.int16) - constant[1].astype(np.int16))
        assert diff.max() <= 1, f"blur level {level} drifted by {diff.max()}"

    # unit pixel blocks cannot change anything
    params = HidingParams(strategy="pixelate", block_size=1)
    noisy = random_frames(seed=102, width=17, height=13, count=3)
    full = [np.ones((13, 17), dtype=bool)] * 3
    out = apply_strategy(params, noisy, full, index=1)
    assert np.array_equal(out, noisy[1])


# ---------------------------------------------------------------------------
# 4. the blur kernel is the exact one advertised


def test_blur_impulse_center_is_41():
    frame = np.zeros((15, 15, 3), dtype=np.uint8)
    frame[7, 7] = 255
    mask = np.ones((15, 15), dtype=bool)
    params = HidingParams(strategy="blur", blur_level=1)
    out = apply_strategy(params, [frame], [mask], index=0)
    assert out[7, 7, 0] == 41
    assert round(255 * (1.0 / 2.505958) ** 2) == 41  # the kernel's own arithmetic


# ---------------------------------------------------------------------------
# 5. cutting work into chunks never changes the output


def test_chunked_processing_equals_single_pass(tmp_path):
    frames = moving_box_frames(seed=103, width=48, height=36, count=100)
    video_in = tmp_path / "in.rvf"
    header = write_video(video_in, frames)
    timeline = bgsub_timeline(frames)
    detections = tmp_path / "det.json"
    detections.write_text(json.dumps(emit_detections(timeline)))

    plans = {s: plan_chunks(100, core_size=40, overlap=0) for s in STATELESS_KERNELS}
    plans["inpaint_median"] = plan_chunks(100, core_size=40, overlap=4)
    for strategy, chunks in plans.items():
        config_doc = _kernel_config(strategy)
        config_path = tmp_path / f"{strategy}.json"
        config_path.write_text(json.dumps(config_doc))
        single_out = tmp_path / f"{strategy}-single.rvf"
        result = CliRunner().invoke(
            cli_main,
            [
                "run",
                "--input", str(video_in),
                "--detections", str(detections),
                "--config", str(config_path),
                "--output", str(single_out),
            ],
        )
        assert result.exit_code == 0, result.output

        config = validate_config(config_doc)
        merged = []
        for chunk in chunks:
            segment = process_segment(
                frames[chunk.input_start : chunk.input_end],
                timeline,
                config,
                start_index=chunk.input_start,
                core=(chunk.core_start, chunk.core_end),
                total_frames=100,
            )
            merged.extend(segment.frames)
        chunked_out = tmp_path / f"{strategy}-chunked.rvf"
        write_rvf_file(chunked_out, header, arrays_to_frames(merged))
        assert chunked_out.read_bytes() == single_out.read_bytes(), (
            f"{strategy}: chunked output differs from single pass"
        )


# ---------------------------------------------------------------------------
# 6. losing a worker mid-job costs time, not correctness


INPAINT_DOC = {"hiding": {"strategy": "inpaint_median", "median_window": 5}, "confidence_threshold": 0.0}


def _big_box_frames(seed, width=240, height=180, count=20, bw=80, bh=60):
    """Box large enough that inpainting takes real time per chunk."""
    rng = np.random.default_rng(seed)
    x = int(rng.integers(0, width - bw))
    y = int(rng.integers(0, height - bh))
    frames = []
    for _ in range(count):
        frame = np.full((height, width, 3), (40, 40, 40), dtype=np.uint8)
        frame[y : y + bh, x : x + bw] = (200, 60, 60)
        frames.append(frame)
        x = int(np.clip(x + rng.integers(-3, 4), 0, width - bw))
        y = int(np.clip(y + rng.integers(-3, 4), 0, height - bh))
    return frames


def _free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


def _corpus(root: Path) -> tuple[Path, Path]:
    root.mkdir(parents=True, exist_ok=True)
    frames = _big_box_frames(seed=1)
    video = root / "clip.rvf"
    write_rvf_file(video, VideoHeader(240, 180, len(frames), 25, 1), arrays_to_frames(frames))
    background = np.full((180, 240, 3), (40, 40, 40), dtype=np.uint8)
    timeline = DetectionTimeline(
        width=240,
        height=180,
        fps=(25, 1),
        frames=[(i, bgsub_detect(background, f, tau=30, min_area=4)) for i, f in enumerate(frames)],
    )
    detections = root / "det.json"
    detections.write_text(json.dumps(emit_detections(timeline)))
    return video, detections


def _start_manager(data_dir: Path, port: int) -> tuple[subprocess.Popen, str]:
    env = dict(os.environ, MASK_HEARTBEAT_TIMEOUT_SECS="1.5")
    proc = subprocess.Popen(
        [
            sys.executable, "-m", "avmask.cli", "serve",
            "--listen", f"127.0.0.1:{port}",
            "--data-dir", str(data_dir),
            "--core-size", "10",
            "--poll-interval", "0.25",
        ],
        env=env,
        stdout=subprocess.DEVNULL,
        stderr=subprocess.DEVNULL,
    )
    base = f"http://127.0.0.1:{port}"
    deadline = time.monotonic() + 30
    while time.monotonic() < deadline:
        try:
            if httpx.get(base + "/api/presets", timeout=1.0).status_code == 200:
                return proc, base
        except httpx.HTTPError:
            time.sleep(0.1)
    proc.kill()
    raise AssertionError("manager did not come up in time")


def _start_worker(base: str, log_path: Path) -> subprocess.Popen:
    return subprocess.Popen(
        [sys.executable, "-m", "avmask.cli", "worker", "--manager", base],
        stdout=subprocess.DEVNULL,
        stderr=open(log_path, "w"),
    )


def _registered_id(log_path: Path, timeout=20.0) -> str:
    pattern = re.compile(r"registered as (w-[0-9a-f]+)")
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        match = pattern.search(log_path.read_text()) if log_path.exists() else None
        if match:
            return match.group(1)
        time.sleep(0.05)
    raise AssertionError(f"worker never registered ({log_path})")


def _run_job_set(root: Path, kill_one: bool):
    """10 jobs, 3 workers; optionally SIGKILL a worker holding a chunk.

    Returns (elapsed seconds, final job listing, killed worker id,
    the chunk it held, manager data dir).
    """
    video, detections = _corpus(root)
    data_dir = root / "data"
    manager, base = _start_manager(data_dir, _free_port())
    workers: dict[str, subprocess.Popen] = {}
    try:
        with httpx.Client(base_url=base, timeout=30.0) as client:
            for _ in range(10):
                response = client.post(
                    "/api/jobs",
                    json={
                        "video_path": str(video),
                        "detections_path": str(detections),
                        "config": INPAINT_DOC,
                    },
                )
                assert response.status_code == 201, response.text
            started = time.monotonic()
            for i in range(3):
                log = root / f"worker{i}.log"
                proc = _start_worker(base, log)
                workers[_registered_id(log)] = proc
            killed = None
            killed_chunk = None
            while True:
                listing = client.get("/api/jobs").json()["jobs"]
                states = [job["state"] for job in listing]
                if kill_one and killed is None:
                    for job in listing:
                        for chunk in job["chunks"]:
                            holder = chunk["assigned_to"]
                            if chunk["state"] == "assigned" and holder in workers:
                                workers[holder].send_signal(signal.SIGKILL)
                                killed, killed_chunk = holder, chunk["id"]
                                break
                        if killed:
                            break
                if all(state == "done" for state in states):
                    break
                assert "failed" not in states, f"a job failed: {states}"
                assert time.monotonic() - started < 120, f"stuck: {states}"
                time.sleep(0.025)
            elapsed = time.monotonic() - started
            final = client.get("/api/jobs").json()["jobs"]
        return elapsed, final, killed, killed_chunk, data_dir
    finally:
        for proc in workers.values():
            if proc.poll() is None:
                proc.kill()
        manager.terminate()
        try:
            manager.wait(timeout=10)
        except subprocess.TimeoutExpired:
            manager.kill()


def test_worker_loss_recovers_within_budget_and_journal_replays(tmp_path):
    nominal, _, _, _, _ = _run_job_set(tmp_path / "clean", kill_one=False)
    elapsed, final, killed, killed_chunk, data_dir = _run_job_set(tmp_path / "fault", kill_one=True)

    assert killed is not None, "never caught a worker holding a chunk"
    assert elapsed <= 3.0 * nominal, f"{elapsed:.1f}s exceeds 3x nominal {nominal:.1f}s"
    chunks = {c["id"]: c for job in final for c in job["chunks"]}
    survivor = chunks[killed_chunk]
    assert survivor["state"] == "done"
    assert survivor["attempts"] >= 2, "the interrupted chunk was never requeued"
    assert survivor["assigned_to"] != killed, "the dead worker cannot have finished it"

    # a fresh manager rebuilt purely from the journal sees the same world
    replayed = Orchestrator(data_dir)
    try:
        assert replayed.list_jobs() == final
    finally:
        replayed.close()


# ---------------------------------------------------------------------------
# 7. voice disguise: neutral exponent is transparent, 0.8 moves formants by the pole-angle law


def test_voice_disguise_neutral_and_formant_shift():
    speech = speech_like_clip(seed=104, seconds=3.0)
    neutral = mcadams_anonymize(speech, McAdamsParams(alpha=1.0))
    assert snr_db(speech.samples, neutral.samples) >= 60.0

    sr = 16000
    rng = np.random.default_rng(1234)
    phi = 2.0 * np.pi * 500.0 / sr
    r = 0.99
    resonance = lfilter([1.0], [1.0, -2.0 * r * np.cos(phi), r * r], rng.standard_normal(3 * sr))
    resonance = 0.3 * resonance / np.max(np.abs(resonance))
    warped = mcadams_anonymize(AudioClip(sr, 1, resonance), McAdamsParams(alpha=0.8))
    freqs, power = welch(warped.samples, fs=sr, nperseg=8192)
    band = (freqs >= 300) & (freqs <= 1200)
    peak = float(freqs[band][np.argmax(power[band])])
    expected = phi**0.8 * sr / (2.0 * np.pi)  # 692.4 Hz
    assert abs(peak - expected) <= 15.0, f"peak {peak:.1f} Hz, expected {expected:.1f} +/- 15"


# ---------------------------------------------------------------------------
# 8. pitch shifting lands on the target frequency; unit ratio is transparent


def test_pitch_shift_targets_and_identity():
    tone = sine_clip(220.0, seconds=1.0)
    up = shift_pitch(tone, PitchShiftParams(ratio=1.5))
    spectrum = np.abs(np.fft.rfft(up.samples))
    spectrum[0] = 0.0
    dominant = np.fft.rfftfreq(len(up.samples), d=1.0 / tone.sample_rate)[int(np.argmax(spectrum))]
    assert abs(dominant - 330.0) <= 330.0 * 0.03, f"dominant {dominant:.1f} Hz"

    same = shift_pitch(tone, PitchShiftParams(ratio=1.0))
    assert snr_db(tone.samples, same.samples[: len(tone.samples)]) >= 40.0


# ---------------------------------------------------------------------------
# 9. the error-rate solver agrees with a brute-force sweep


def test_eer_matches_midpoint_sweep_and_edges():
    rng = np.random.default_rng(105)
    for _ in range(1000):
        n_genuine = int(rng.integers(2, 40))
        n_impostor = int(rng.integers(2, 40))
        if rng.random() < 0.5:
            genuine = np.round(rng.normal(0.65, 0.2, n_genuine), 2)
            impostor = np.round(rng.normal(0.35, 0.2, n_impostor), 2)
        else:
            genuine = rng.normal(0.65, 0.2, n_genuine)
            impostor = rng.normal(0.35, 0.2, n_impostor)
        scores = ScoreSet(genuine=list(genuine), impostor=list(impostor))
        eer, _ = compute_eer(scores)
        oracle = eer_midpoint_oracle(list(genuine), list(impostor))
        assert abs(eer - oracle) <= 1e-9

    separated, _ = compute_eer(ScoreSet(genuine=[0.8, 0.9], impostor=[0.1, 0.2]))
    assert separated == 0.0
    overlapped, _ = compute_eer(ScoreSet(genuine=[0.3, 0.7], impostor=[0.3, 0.7]))
    assert overlapped == pytest.approx(0.5, abs=1e-9)
    assert format_percent(0.476) == "47.60%"


# ---------------------------------------------------------------------------
# 10. transcription error: worked example and self identity


def test_wer_worked_example_and_identity():
    reference = "the quick brown fox jumps high".split()
    hypothesis = "the quick crimson fox jumps high up".split()
    assert compute_wer(reference, hypothesis) == pytest.approx(2.0 / 6.0, abs=1e-12)

    rng = np.random.default_rng(106)
    vocabulary = ["alpha", "beta", "gamma", "delta", "epsilon"]
    for _ in range(50):
        words = [vocabulary[i] for i in rng.integers(0, len(vocabulary), int(rng.integers(1, 30)))]
        assert compute_wer(words, list(words)) == 0.0


# ---------------------------------------------------------------------------
# 11. pitch utilities: correlation is scale-blind, the tracker is accurate


def test_pitch_correlation_and_tracker_accuracy():
    sr = 16000
    t = np.arange(int(1.2 * sr)) / sr
    f0 = 160.0 + 20.0 * np.sin(2.0 * np.pi * 2.5 * t)
    phase = 2.0 * np.pi * np.cumsum(f0) / sr
    vibrato = AudioClip(sr, 1, 0.4 * np.sin(phase))
    track = track_pitch(vibrato)
    doubled = PitchTrack(
        hop=track.hop,
        frames=[(2.0 * f0, c) if f0 is not None else (None, c) for f0, c in track.frames],
    )
    assert pitch_correlation(track, doubled) == pytest.approx(1.0, abs=1e-9)

    steady = track_pitch(sine_clip(440.0, seconds=1.0, amp=0.4))
    voiced = steady.voiced_values()
    assert len(voiced) > 0
    assert np.all(np.abs(voiced - 440.0) <= 2.0), f"tracked {voiced.min():.2f}..{voiced.max():.2f}"


# ---------------------------------------------------------------------------
# 12. motion capture export round-trips and counts


def test_kinematics_roundtrip_and_row_counts():
    records = _random_records(seed=107, frame_count=5)
    back = import_kinematics_json(export_kinematics_json(records))
    assert _records_equal(records, back)

    csv_text = export_kinematics_csv(records)
    rows = csv_text.strip().splitlines()[1:]
    expected = sum(
        len(getattr(person.landmarks, block))
        for record in records
        for person in record.persons
        for block in ("pose", "face", "left_hand", "right_hand")
        if getattr(person.landmarks, block) is not None
    )
    assert len(rows) == expected

    from avmask.overlay import LandmarkFrame
    from avmask.pipeline.kinematics import FrameKinematics, PersonKinematics

    pose_only = [
        FrameKinematics(
            index=0,
            persons=[
                PersonKinematics(
                    person_id="p0",
                    landmarks=LandmarkFrame(pose=np.zeros((33, 4))),
                )
            ],
        )
    ]
    rows = export_kinematics_csv(pose_only).strip().splitlines()[1:]
    assert len(rows) == 33


# ---------------------------------------------------------------------------
# 13. everything above is self-contained: no web client, no codec binaries


def test_suite_is_native_only(tmp_path, monkeypatch):
    # every module imports with nothing external present
    for info in pkgutil.walk_packages(avmask.__path__, "avmask."):
        importlib.import_module(info.name)

    # the optional transcoder adapter is the only place allowed to shell out,
    # and nothing inside the package imports it
    forbidden = re.compile(
        r"^\s*(?:import subprocess|from subprocess|from avmask\.media\.bridge|"
        r"from \.bridge|from avmask\.media import .*\bbridge\b)",
        re.MULTILINE,
    )
    package_root = Path(avmask.__file__).parent
    for source in package_root.rglob("*.py"):
        if source.name == "bridge.py":
            continue
        match = forbidden.search(source.read_text(encoding="utf-8"))
        assert match is None, f"{source} pulls in the transcoder adapter: {match.group(0)!r}"

    # a full run succeeds while the configured transcoder cannot exist
    monkeypatch.setenv("MASK_TRANSCODER", "no-such-transcoder-1f9e")
    monkeypatch.setenv("MASK_PROBE", "no-such-probe-1f9e")
    frames = moving_box_frames(seed=108, width=32, height=24, count=8)
    video = tmp_path / "in.rvf"
    write_video(video, frames)
    timeline = bgsub_timeline(frames)
    detections = tmp_path / "det.json"
    detections.write_text(json.dumps(emit_detections(timeline)))
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(_kernel_config("blackout")))
    out = tmp_path / "out.rvf"
    result = CliRunner().invoke(
        cli_main,
        [
            "run",
            "--input", str(video),
            "--detections", str(detections),
            "--config", str(config_path),
            "--output", str(out),
        ],
    )
    assert result.exit_code == 0, result.output
    header, produced = read_rvf_file(out)
    assert header.frame_count == 8
    single = process_segment(frames, timeline, validate_config(_kernel_config("blackout")))
    for got, want in zip(frames_to_arrays(produced), single.frames):
        assert np.array_equal(got, want)
