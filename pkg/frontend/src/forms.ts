/**
 * HTML renderers. Everything is generated from field descriptors, so a
 * schema change reshapes the wizard without touching this file. Pure
 * string producers; event wiring lives in main.ts.
 */

import type { JobView } from "./dashboard.js";
import type { Preset } from "./api.js";
import type { FieldSpec } from "./schema.js";
import { STEP_TITLES } from "./wizard.js";

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

const escapeAttr = escapeHtml;

function labelFor(name: string): string {
  return name.replaceAll("_", " ");
}

function controlInner(spec: FieldSpec, value: unknown): string {
  const path = escapeAttr(spec.path);
  switch (spec.control) {
    case "select": {
      const options = spec.options
        .map((option) => {
          const selected = option === value ? " selected" : "";
          return `<option value="${escapeAttr(option)}"${selected}>${escapeHtml(option)}</option>`;
        })
        .join("");
      return `<select data-path="${path}"><option value="">(default)</option>${options}</select>`;
    }
    case "range": {
      const current = typeof value === "number" ? value : spec.min;
      return (
        `<input type="range" data-path="${path}" min="${spec.min}" max="${spec.max}" step="1" value="${current}">` +
        `<output>${current}</output>`
      );
    }
    case "number": {
      const min = spec.min ?? spec.exclusiveMin;
      const attrs = [
        min !== undefined ? `min="${min}"` : "",
        spec.max !== undefined ? `max="${spec.max}"` : "",
        `step="${spec.integer ? 1 : "any"}"`,
      ]
        .filter(Boolean)
        .join(" ");
      const current = typeof value === "number" ? ` value="${value}"` : "";
      return `<input type="number" data-path="${path}" ${attrs}${current}>`;
    }
    case "toggle": {
      const checked = value === true ? " checked" : "";
      return `<input type="checkbox" data-path="${path}"${checked}>`;
    }
    case "tuple": {
      const entries = Array.isArray(value) ? value : [];
      const inputs = Array.from({ length: spec.size }, (_, i) => {
        const current = typeof entries[i] === "number" ? ` value="${entries[i]}"` : "";
        return `<input type="number" data-path="${path}" data-tuple-index="${i}" data-tuple-size="${spec.size}"${current}>`;
      });
      return `<span class="tuple">${inputs.join("")}</span>`;
    }
    case "text": {
      const current = typeof value === "string" ? ` value="${escapeAttr(value)}"` : "";
      return `<input type="text" data-path="${path}"${current}>`;
    }
    default:
      return "";
  }
}

function valueAt(document: Record<string, unknown>, path: string): unknown {
  let cursor: unknown = document;
  for (const raw of path.split(".")) {
    const match = /^(.*)\[(\d+)\]$/.exec(raw);
    if (typeof cursor !== "object" || cursor === null) return undefined;
    if (match) {
      const list = (cursor as Record<string, unknown>)[match[1] as string];
      cursor = Array.isArray(list) ? list[Number(match[2])] : undefined;
    } else {
      cursor = (cursor as Record<string, unknown>)[raw];
    }
  }
  return cursor;
}

export function renderField(
  spec: FieldSpec,
  draft: Record<string, unknown>,
  errors: Map<string, string>,
): string {
  if (spec.control === "group") {
    const inner = spec.fields.map((field) => renderField(field, draft, errors)).join("");
    if (!spec.path) return inner;
    return `<fieldset class="group"><legend>${escapeHtml(labelFor(spec.name))}</legend>${inner}</fieldset>`;
  }
  if (spec.control === "list") return ""; // rendered by the overlay panel
  const error = errors.get(spec.path);
  const message = error
    ? `<span class="field-error" data-error-for="${escapeAttr(spec.path)}">${escapeHtml(error)}</span>`
    : "";
  return (
    `<label class="field" data-field="${escapeAttr(spec.path)}">` +
    `<span class="field-name">${escapeHtml(labelFor(spec.name))}</span>` +
    controlInner(spec, valueAt(draft, spec.path)) +
    message +
    `</label>`
  );
}

export function renderStepRail(current: number): string {
  const segments = STEP_TITLES.map((title, index) => {
    const state = index + 1 === current ? "active" : index + 1 < current ? "done" : "";
    return `<li class="rail-step ${state}"><span>${index + 1}</span>${escapeHtml(title)}</li>`;
  });
  return `<ol class="rail">${segments.join("")}</ol>`;
}

export function renderPresetCard(preset: Preset): string {
  const name = escapeAttr(preset.name);
  return (
    `<article class="preset-card" data-preset="${name}">` +
    `<h3>${escapeHtml(preset.name)}</h3>` +
    `<p>${escapeHtml(preset.description)}</p>` +
    `<div class="card-actions">` +
    `<button data-action="preset-submit" data-preset="${name}">Start masking</button>` +
    `<button data-action="preset-refine" data-preset="${name}" class="ghost">Refine in wizard</button>` +
    `</div></article>`
  );
}

export function renderJobCard(view: JobView, detailHref: string): string {
  const error = view.failed && view.error ? `<p class="job-error">${escapeHtml(view.error)}</p>` : "";
  return (
    `<article class="job-card" data-job="${escapeAttr(view.id)}">` +
    `<header><a href="${escapeAttr(detailHref)}">${escapeHtml(view.id)}</a>` +
    `<span class="badge badge-${escapeAttr(view.state)}">${escapeHtml(view.state)}</span></header>` +
    `<div class="progress"><div class="progress-fill" style="width:${view.progressPercent}"></div></div>` +
    `<p class="job-meta">${view.progressPercent} &middot; ${view.chunksDone}/${view.chunksTotal} chunks</p>` +
    error +
    `</article>`
  );
}

export function renderDownloads(
  view: JobView,
  urls: { output: string; audio: string; json: string; csv: string },
): string {
  if (!view.terminal || view.failed) return "";
  const links = [
    `<a href="${escapeAttr(urls.output)}" download>masked video</a>`,
    view.audioAvailable ? `<a href="${escapeAttr(urls.audio)}" download>audio</a>` : "",
    view.kinematicsJson ? `<a href="${escapeAttr(urls.json)}" download>kinematics JSON</a>` : "",
    view.kinematicsCsv ? `<a href="${escapeAttr(urls.csv)}" download>kinematics CSV</a>` : "",
  ].filter(Boolean);
  return `<nav class="downloads">${links.join(" ")}</nav>`;
}

export function renderRetryBanner(detail: string): string {
  return (
    `<div class="banner">` +
    `<p>Cannot reach the manager: ${escapeHtml(detail)}</p>` +
    `<button data-action="retry">Retry</button>` +
    `</div>`
  );
}
