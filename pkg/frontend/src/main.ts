/**
 * App wiring: a hash router over three views (submit, job list, job
 * detail), with all state kept in module scope and every render a
 * full redraw of #app. The manager holds the real state; this file
 * only reflects it.
 */

import { ApiError, ManagerClient, type Preset } from "./api.js";
import { jobView, watchJob, type JobView } from "./dashboard.js";
import {
  escapeHtml,
  renderDownloads,
  renderField,
  renderJobCard,
  renderPresetCard,
  renderRetryBanner,
  renderStepRail,
} from "./forms.js";
import { RvfPlayer } from "./preview.js";
import { fieldSpec, type FieldSpec, type SchemaNode } from "./schema.js";
import { STEP_COUNT, Wizard } from "./wizard.js";

const client = new ManagerClient("");

let schema: SchemaNode | null = null;
let presets: Preset[] = [];
let wizard: Wizard | null = null;
let wizardOpen = false;
let submitError: { path?: string; message: string } | null = null;
let player: RvfPlayer | null = null;
let pollToken = 0;
const shownProgress = new Map<string, number>();

function app(): HTMLElement {
  return document.getElementById("app") as HTMLElement;
}

// -- boot -------------------------------------------------------------

async function boot(): Promise<void> {
  try {
    [presets, schema] = await Promise.all([client.presets(), client.configSchema()]);
  } catch (error) {
    app().innerHTML = renderRetryBanner(error instanceof Error ? error.message : String(error));
    return;
  }
  route();
}

// -- submit view -------------------------------------------------------

function sourceInputs(): string {
  return (
    `<fieldset class="group sources"><legend>source files (paths on the manager host)</legend>` +
    `<label class="field"><span class="field-name">video path</span>` +
    `<input type="text" id="video-path" placeholder="/data/uploads/clip.rvf"></label>` +
    `<label class="field"><span class="field-name">audio path (optional)</span>` +
    `<input type="text" id="audio-path" placeholder="/data/uploads/clip.wav"></label>` +
    `<label class="field"><span class="field-name">detections path (optional)</span>` +
    `<input type="text" id="detections-path"></label></fieldset>`
  );
}

const STEP_SECTIONS = ["hiding", "overlays", "voice", "exports"] as const;

function stepBody(active: Wizard, current: number): string {
  if (!schema) return "";
  const errors = active.stepErrors();
  const draft = active.buildConfig();
  if (current === 2) {
    const overlays = (draft["overlays"] as unknown[] | undefined) ?? [];
    const itemNode = (schema.properties?.["overlays"]?.items ?? {}) as SchemaNode;
    const panels = overlays.map((_, index) => {
      const spec = fieldSpec(itemNode, `overlays[${index}]`);
      return (
        `<div class="overlay-panel">` +
        renderField(spec, draft, errors) +
        `<button data-action="remove-overlay" data-index="${index}" class="ghost">remove</button>` +
        `</div>`
      );
    });
    return (
      panels.join("") +
      `<button data-action="add-overlay">Add overlay layer</button>` +
      (overlays.length === 0 ? `<p class="hint">No overlays; hidden regions stay bare.</p>` : "")
    );
  }
  const section = STEP_SECTIONS[current - 1] as string;
  const node = schema.properties?.[section];
  let html = node ? renderField(fieldSpec(node, section), draft, errors) : "";
  if (current === 1) {
    const threshold = schema.properties?.["confidence_threshold"];
    if (threshold) html += renderField(fieldSpec(threshold, "confidence_threshold"), draft, errors);
  }
  return html;
}

function renderSubmit(): void {
  const cards = presets.map(renderPresetCard).join("");
  let wizardHtml = "";
  if (wizardOpen && wizard) {
    const submitNote = submitError
      ? `<p class="banner-inline">${escapeHtml(
          (submitError.path ? submitError.path + ": " : "") + submitError.message,
        )}</p>`
      : "";
    wizardHtml =
      `<section class="wizard">` +
      renderStepRail(wizard.step) +
      `<form id="wizard-form">${stepBody(wizard, wizard.step)}</form>` +
      submitNote +
      `<div class="wizard-nav">` +
      (wizard.step > 1 ? `<button data-action="back">Back</button>` : `<span></span>`) +
      (wizard.step < STEP_COUNT
        ? `<button data-action="next">Next</button>`
        : `<button data-action="submit" class="primary">Submit job</button>`) +
      `</div></section>`;
  }
  app().innerHTML =
    `<h2>New masking job</h2>` +
    sourceInputs() +
    `<section class="presets">${cards}</section>` +
    `<button data-action="open-wizard">${wizardOpen ? "Restart wizard" : "Configure step by step"}</button>` +
    wizardHtml;
}

function readSources(): { video_path: string; audio_path?: string; detections_path?: string } {
  const read = (id: string) =>
    (document.getElementById(id) as HTMLInputElement | null)?.value.trim() ?? "";
  const video = read("video-path");
  const audio = read("audio-path");
  const detections = read("detections-path");
  return {
    video_path: video,
    ...(audio ? { audio_path: audio } : {}),
    ...(detections ? { detections_path: detections } : {}),
  };
}

async function submit(body: Record<string, unknown>): Promise<void> {
  submitError = null;
  try {
    const job = await client.submitJob({ ...readSources(), ...body });
    shownProgress.set(job.id, 0);
    window.location.hash = `#/jobs/${job.id}`;
  } catch (error) {
    if (error instanceof ApiError) {
      submitError = { path: error.path, message: error.message };
      // put the wizard on the step that owns the rejected field
      if (wizard && error.path && error.status === 422) {
        wizard.step = wizard.stepForPath(error.path);
        wizardOpen = true;
      }
    } else {
      submitError = { message: error instanceof Error ? error.message : String(error) };
    }
    renderSubmit();
  }
}

// -- dashboard views ----------------------------------------------------

async function renderJobs(): Promise<void> {
  const token = ++pollToken;
  app().innerHTML = `<h2>Jobs</h2><div id="job-list" class="job-list">loading…</div>`;
  const interval = await client.advertisedPollInterval().catch(() => 1.0);
  const tick = async (): Promise<void> => {
    if (token !== pollToken) return;
    let jobs;
    try {
      jobs = await client.listJobs();
    } catch (error) {
      const list = document.getElementById("job-list");
      if (list) list.innerHTML = renderRetryBanner(String(error));
      return;
    }
    const views = jobs.map((job) => {
      const view = jobView(job, shownProgress.get(job.id) ?? 0);
      shownProgress.set(job.id, view.progress);
      return view;
    });
    const list = document.getElementById("job-list");
    if (!list || token !== pollToken) return;
    list.innerHTML = views.length
      ? views.map((view) => renderJobCard(view, `#/jobs/${view.id}`)).join("")
      : "<p>No jobs yet.</p>";
    if (views.some((view) => !view.terminal)) {
      setTimeout(() => void tick(), interval * 1000);
    }
  };
  await tick();
}

function detailShell(view: JobView): string {
  const urls = {
    output: client.outputUrl(view.id),
    audio: client.audioUrl(view.id),
    json: client.kinematicsUrl(view.id, "json"),
    csv: client.kinematicsUrl(view.id, "csv"),
  };
  const preview = view.previewEnabled
    ? `<div class="player"><canvas id="preview-canvas"></canvas>` +
      `<button data-action="toggle-play">play / pause</button></div>`
    : `<p class="hint">Preview unlocks when the job is done.</p>`;
  return (
    `<h2>Job ${escapeHtml(view.id)}</h2>` +
    renderJobCard(view, `#/jobs/${view.id}`) +
    preview +
    renderDownloads(view, urls) +
    `<p><a href="#/jobs">back to all jobs</a></p>`
  );
}

async function renderJobDetail(jobId: string): Promise<void> {
  const token = ++pollToken;
  player?.pause();
  player = null;
  const interval = await client.advertisedPollInterval().catch(() => 1.0);
  const paint = (view: JobView): void => {
    if (token !== pollToken) return;
    app().innerHTML = detailShell(view);
    if (view.previewEnabled && !player) {
      const canvas = document.getElementById("preview-canvas") as HTMLCanvasElement | null;
      if (canvas) {
        player = new RvfPlayer(canvas, client.outputUrl(view.id));
        void player.load();
      }
    }
  };
  try {
    await watchJob(client, jobId, {
      pollInterval: interval,
      sleep: (seconds) =>
        new Promise((resolve) => setTimeout(resolve, seconds * 1000)).then(() => {
          if (token !== pollToken) throw new Error("navigated away");
        }),
      onUpdate: (view) => {
        shownProgress.set(view.id, view.progress);
        paint(view);
      },
    });
  } catch (error) {
    if (token !== pollToken) return; // navigation cancelled the watch
    app().innerHTML = renderRetryBanner(error instanceof Error ? error.message : String(error));
  }
}

// -- router and events ---------------------------------------------------

function route(): void {
  pollToken++;
  player?.pause();
  player = null;
  const hash = window.location.hash || "#/";
  const detail = /^#\/jobs\/(.+)$/.exec(hash);
  if (detail) {
    void renderJobDetail(detail[1] as string);
  } else if (hash === "#/jobs") {
    void renderJobs();
  } else {
    renderSubmit();
  }
}

function coerce(input: HTMLInputElement | HTMLSelectElement): unknown {
  if (input instanceof HTMLInputElement && input.type === "checkbox") return input.checked;
  if (input instanceof HTMLInputElement && (input.type === "number" || input.type === "range")) {
    return input.value === "" ? undefined : Number(input.value);
  }
  return input.value === "" ? undefined : input.value;
}

function onFieldChange(target: HTMLInputElement | HTMLSelectElement): void {
  if (!wizard) return;
  const path = target.dataset["path"];
  if (!path) return;
  const tupleIndex = target.dataset["tupleIndex"];
  if (tupleIndex !== undefined) {
    const size = Number(target.dataset["tupleSize"] ?? "0");
    const values: unknown[] = [];
    document
      .querySelectorAll<HTMLInputElement>(`[data-path="${path}"][data-tuple-index]`)
      .forEach((input) => {
        values[Number(input.dataset["tupleIndex"])] = coerce(input);
      });
    for (let i = 0; i < size; i++) values[i] ??= 0;
    wizard.setField(path, values);
    return;
  }
  wizard.setField(path, coerce(target));
  if (target instanceof HTMLInputElement && target.type === "range") {
    const output = target.nextElementSibling;
    if (output instanceof HTMLOutputElement) output.textContent = target.value;
  }
}

function onClick(event: Event): void {
  const target = (event.target as HTMLElement).closest("[data-action]");
  if (!(target instanceof HTMLElement)) return;
  const action = target.dataset["action"];
  switch (action) {
    case "retry":
      void boot();
      break;
    case "open-wizard":
      wizard = schema ? new Wizard(schema) : null;
      wizardOpen = true;
      submitError = null;
      renderSubmit();
      break;
    case "preset-refine": {
      const preset = presets.find((p) => p.name === target.dataset["preset"]);
      wizard = schema && preset ? new Wizard(schema, preset.config) : null;
      wizardOpen = true;
      submitError = null;
      renderSubmit();
      break;
    }
    case "preset-submit":
      void submit({ preset: target.dataset["preset"] });
      break;
    case "next":
      if (wizard && !wizard.next()) {
        // invalid fields stay on screen with their messages
      }
      renderSubmit();
      break;
    case "back":
      wizard?.back();
      renderSubmit();
      break;
    case "add-overlay":
      wizard?.addOverlay("skeleton");
      renderSubmit();
      break;
    case "remove-overlay":
      wizard?.removeOverlay(Number(target.dataset["index"]));
      renderSubmit();
      break;
    case "submit":
      if (wizard?.canSubmit) void submit({ config: wizard.buildConfig() });
      break;
    case "toggle-play":
      if (player) player.playing ? player.pause() : player.play();
      break;
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  document.addEventListener("change", (event) => {
    const target = event.target;
    if (target instanceof HTMLInputElement || target instanceof HTMLSelectElement) {
      onFieldChange(target);
    }
  });
  document.addEventListener("click", onClick);
  window.addEventListener("hashchange", route);
  void boot();
}
