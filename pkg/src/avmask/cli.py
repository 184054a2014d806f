"""Command line front door: run, serve, worker, eval."""

from __future__ import annotations

import json
import logging
import sys
import threading
import time
from pathlib import Path

import click
import numpy as np

from avmask.detection import DetectionTimeline, parse_detections, rasterize_region
from avmask.errors import MaskingError, ParameterError
from avmask.evaluation.leakage import leakage_per_frame, mask_leakage
from avmask.evaluation.pitch import pitch_correlation, track_pitch
from avmask.evaluation.report import render_report
from avmask.evaluation.scores import compute_eer, format_percent, parse_score_file
from avmask.evaluation.text import agreement_score, compute_wer, tokenize
from avmask.hiding import STRATEGIES
from avmask.media.rvf import (
    arrays_to_frames,
    frames_to_arrays,
    read_rvf_file,
    write_rvf_file,
)
from avmask.media.wavio import read_wav_file, write_wav_file
from avmask.pipeline.config import resolve_preset, validate_config
from avmask.pipeline.executor import process_segment
from avmask.pipeline.kinematics import export_kinematics_csv, export_kinematics_json
from avmask.voice.strategy import apply_voice_strategy


@click.group()
@click.option("--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s %(message)s",
    )


def _fail(exc: MaskingError):
    raise click.ClickException(str(exc))


def _load_config_document(spec: str) -> dict:
    if spec.startswith("preset:"):
        return resolve_preset(spec[len("preset:"):]).to_document()
    return json.loads(Path(spec).read_text(encoding="utf-8"))


def _load_detections(path) -> DetectionTimeline:
    return parse_detections(Path(path).read_text(encoding="utf-8"))


def _union_masks(timeline: DetectionTimeline, frame_count: int, threshold: float):
    """Per-frame boolean union of detected person regions."""
    masks = []
    for index in range(frame_count):
        mask = np.zeros((timeline.height, timeline.width), dtype=bool)
        for person in timeline.persons_at(index):
            if person.confidence >= threshold:
                mask |= rasterize_region(person, timeline.width, timeline.height)
        masks.append(mask)
    return masks


# -- run ------------------------------------------------------------


@main.command("run")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--detections", "detections_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_spec", required=True, help="Config JSON file or preset:NAME.")
@click.option("--output", "output_path", required=True, type=click.Path(dir_okay=False))
@click.option("--audio", "audio_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--audio-out", "audio_out", type=click.Path(dir_okay=False))
@click.option("--kinematics-json", "kin_json", type=click.Path(dir_okay=False))
@click.option("--kinematics-csv", "kin_csv", type=click.Path(dir_okay=False))
def run_command(input_path, detections_path, config_spec, output_path, audio_path, audio_out, kin_json, kin_csv):
    """Mask one video in a single pass."""
    try:
        config = validate_config(_load_config_document(config_spec))
        header, frames = read_rvf_file(input_path)
        if detections_path is None and config.detections:
            detections_path = config.detections
        timeline = _load_detections(detections_path) if detections_path else None
        result = process_segment(frames_to_arrays(frames), timeline, config)
        write_rvf_file(output_path, header, arrays_to_frames(result.frames))
        click.echo(f"wrote {header.frame_count} frames -> {output_path}")

        if audio_path is not None:
            clip = read_wav_file(audio_path)
            processed = apply_voice_strategy(clip, config.voice)
            if processed is None:
                click.echo("audio track removed per voice strategy")
            else:
                target = audio_out or str(Path(output_path).with_suffix(".wav"))
                write_wav_file(target, processed)
                click.echo(f"wrote audio -> {target}")
        elif config.voice.strategy == "switch":
            raise ParameterError("voice strategy 'switch' requires --audio")

        meta = {
            "width": header.width,
            "height": header.height,
            "frame_count": header.frame_count,
            "fps": [header.fps_num, header.fps_den],
        }
        if config.kinematics_json:
            target = kin_json or output_path + ".kinematics.json"
            doc = export_kinematics_json(result.kinematics, video_meta=meta)
            if result.skipped_overlays:
                doc["skipped_overlays"] = result.skipped_overlays
            Path(target).write_text(json.dumps(doc, indent=2), encoding="utf-8")
            click.echo(f"wrote kinematics -> {target}")
        if config.kinematics_csv:
            target = kin_csv or output_path + ".kinematics.csv"
            Path(target).write_text(export_kinematics_csv(result.kinematics), encoding="utf-8")
            click.echo(f"wrote kinematics -> {target}")
        if result.skipped_overlays:
            click.echo(f"skipped {len(result.skipped_overlays)} overlay draw(s), see report", err=True)
    except MaskingError as exc:
        _fail(exc)


# -- serve ----------------------------------------------------------


@main.command("serve")
@click.option("--listen", default="127.0.0.1:8000", show_default=True, help="host:port to bind.")
@click.option(
    "--data-dir",
    envvar="MASK_DATA_DIR",
    required=True,
    type=click.Path(file_okay=False),
    help="State directory (env MASK_DATA_DIR).",
)
@click.option("--core-size", default=250, show_default=True)
@click.option("--poll-interval", default=1.0, show_default=True)
def serve_command(listen, data_dir, core_size, poll_interval):
    """Start the manager HTTP service."""
    import uvicorn

    from avmask.manager.core import Orchestrator
    from avmask.manager.service import create_app

    host, _, port = listen.rpartition(":")
    if not host or not port.isdigit():
        raise click.ClickException(f"--listen must be host:port, got {listen!r}")
    orchestrator = Orchestrator(data_dir, core_size=core_size, poll_interval=poll_interval)
    orchestrator.resume()

    def reaper():
        interval = max(min(orchestrator.heartbeat_timeout / 2.0, 5.0), 0.05)
        while True:
            time.sleep(interval)
            try:
                orchestrator.reap_stale()
            except Exception:
                logging.getLogger("avmask.serve").exception("reap pass failed")

    threading.Thread(target=reaper, daemon=True, name="reaper").start()
    app = create_app(orchestrator)
    uvicorn.run(app, host=host, port=int(port), log_level="warning")


# -- worker ---------------------------------------------------------


@main.command("worker")
@click.option("--manager", "manager_url", required=True, help="Manager base URL.")
@click.option("--capabilities", default=",".join(STRATEGIES), show_default=True)
@click.option("--parallelism", default=1, show_default=True)
@click.option("--poll-interval", default=1.0, show_default=True)
def worker_command(manager_url, capabilities, parallelism, poll_interval):
    """Run a worker against a manager."""
    from avmask.worker import WorkerConfig, run_worker

    try:
        config = WorkerConfig(
            manager_url=manager_url,
            capabilities=tuple(c.strip() for c in capabilities.split(",") if c.strip()),
            poll_interval=poll_interval,
            parallelism=parallelism,
        )
    except MaskingError as exc:
        _fail(exc)
    try:
        run_worker(config)
    except KeyboardInterrupt:
        pass
    except Exception as exc:
        click.echo(f"worker crashed: {exc}", err=True)
        sys.exit(1)


# -- eval -----------------------------------------------------------


@main.group("eval")
def eval_group():
    """Evaluation metrics on files."""


@eval_group.command("pitch-corr")
@click.option("--a", "path_a", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--b", "path_b", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--window-ms", default=40.0, show_default=True)
@click.option("--hop-ms", default=10.0, show_default=True)
def pitch_corr_command(path_a, path_b, window_ms, hop_ms):
    """Pearson correlation of voiced pitch tracks."""
    try:
        track_a = track_pitch(read_wav_file(path_a).as_mono(), window_ms, hop_ms)
        track_b = track_pitch(read_wav_file(path_b).as_mono(), window_ms, hop_ms)
        value = pitch_correlation(track_a, track_b)
    except MaskingError as exc:
        _fail(exc)
    click.echo(f"pitch correlation: {value:.4f}")


@eval_group.command("eer")
@click.option("--scores", "scores_path", required=True, type=click.Path(exists=True, dir_okay=False))
def eer_command(scores_path):
    """Equal error rate of genuine/impostor score lists."""
    try:
        scores = parse_score_file(Path(scores_path).read_text(encoding="utf-8"))
        eer, threshold = compute_eer(scores)
    except MaskingError as exc:
        _fail(exc)
    click.echo(f"EER: {format_percent(eer)} (threshold {threshold:.6f})")


@eval_group.command("wer")
@click.option("--ref", "ref_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--hyp", "hyp_path", required=True, type=click.Path(exists=True, dir_okay=False))
def wer_command(ref_path, hyp_path):
    """Word error rate between transcript files."""
    try:
        reference = tokenize(Path(ref_path).read_text(encoding="utf-8"))
        hypothesis = tokenize(Path(hyp_path).read_text(encoding="utf-8"))
        value = compute_wer(reference, hypothesis)
    except MaskingError as exc:
        _fail(exc)
    click.echo(f"WER: {format_percent(value)}")


@eval_group.command("agreement")
@click.option("--a", "path_a", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--b", "path_b", required=True, type=click.Path(exists=True, dir_okay=False))
def agreement_command(path_a, path_b):
    """Fraction of positions with equal labels."""
    try:
        labels_a = tokenize(Path(path_a).read_text(encoding="utf-8"))
        labels_b = tokenize(Path(path_b).read_text(encoding="utf-8"))
        value = agreement_score(labels_a, labels_b)
    except MaskingError as exc:
        _fail(exc)
    click.echo(f"agreement: {format_percent(value)}")


@eval_group.command("leakage")
@click.option("--original", "original_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--masked", "masked_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--detections", "detections_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--confidence-threshold", default=0.0, show_default=True)
def leakage_command(original_path, masked_path, detections_path, confidence_threshold):
    """Fraction of person pixels that survived masking unchanged."""
    try:
        _, orig_frames = read_rvf_file(original_path)
        _, out_frames = read_rvf_file(masked_path)
        timeline = _load_detections(detections_path)
        masks = _union_masks(timeline, len(orig_frames), confidence_threshold)
        value = mask_leakage(
            frames_to_arrays(orig_frames), frames_to_arrays(out_frames), masks
        )
    except MaskingError as exc:
        _fail(exc)
    click.echo(f"mask leakage: {format_percent(value)}")


@eval_group.command("report")
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--original-audio", type=click.Path(exists=True, dir_okay=False))
@click.option("--processed-audio", type=click.Path(exists=True, dir_okay=False))
@click.option("--scores", "scores_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--original-video", type=click.Path(exists=True, dir_okay=False))
@click.option("--masked-video", type=click.Path(exists=True, dir_okay=False))
@click.option("--detections", "detections_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--confidence-threshold", default=0.0, show_default=True)
def report_command(
    out_dir,
    original_audio,
    processed_audio,
    scores_path,
    original_video,
    masked_video,
    detections_path,
    confidence_threshold,
):
    """Render metrics.csv plus figures for whatever inputs are given."""
    try:
        original = read_wav_file(original_audio) if original_audio else None
        processed = read_wav_file(processed_audio) if processed_audio else None
        scores = (
            parse_score_file(Path(scores_path).read_text(encoding="utf-8"))
            if scores_path
            else None
        )
        leakage = None
        per_frame = None
        if original_video and masked_video and detections_path:
            _, orig_frames = read_rvf_file(original_video)
            _, out_frames = read_rvf_file(masked_video)
            timeline = _load_detections(detections_path)
            masks = _union_masks(timeline, len(orig_frames), confidence_threshold)
            orig_arrays = frames_to_arrays(orig_frames)
            out_arrays = frames_to_arrays(out_frames)
            leakage = mask_leakage(orig_arrays, out_arrays, masks)
            per_frame = leakage_per_frame(orig_arrays, out_arrays, masks)
        summary = render_report(
            out_dir,
            original=original,
            processed=processed,
            scores=scores,
            leakage=leakage,
            per_frame_leakage=per_frame,
        )
    except MaskingError as exc:
        _fail(exc)
    for name, value in sorted(summary["metrics"].items()):
        click.echo(f"{name}: {value}")
    for path in summary["files"]:
        click.echo(f"wrote {path}")


if __name__ == "__main__":
    main()
