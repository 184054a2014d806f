/**
 * Four-step masking configuration wizard.
 *
 * Step 1 picks the hiding kernel and detection threshold, step 2 the
 * overlay layers, step 3 the audio treatment, step 4 the exports. The
 * draft advances only when the current step validates against the
 * served schema, and going back never loses entered values. The final
 * document contains exactly what the user touched; untouched fields
 * fall to the server's defaults.
 */

import type { ConfigDocument } from "./api.js";
import type { SchemaNode } from "./schema.js";
import { crossFieldErrors, validateDocument } from "./validate.js";

export const STEP_COUNT = 4;

export const STEP_TITLES = ["Hiding", "Overlays", "Audio", "Exports"] as const;

// the config paths each step owns; a step blocks on its own errors only
const STEP_PREFIXES: ReadonlyArray<ReadonlyArray<string>> = [
  ["hiding", "confidence_threshold"],
  ["overlays"],
  ["voice"],
  ["exports"],
];

function ownedBy(step: number, errorPath: string): boolean {
  const prefixes = STEP_PREFIXES[step - 1] ?? [];
  if (errorPath === "(document root)") return step === 1;
  return prefixes.some(
    (prefix) => errorPath === prefix || errorPath.startsWith(prefix + ".") || errorPath.startsWith(prefix + "["),
  );
}

function setPath(target: Record<string, unknown>, path: string, value: unknown): void {
  const segments = path.split(".");
  let cursor: Record<string, unknown> = target;
  for (const segment of segments.slice(0, -1)) {
    const match = /^(.*)\[(\d+)\]$/.exec(segment);
    if (match) {
      const list = (cursor[match[1] as string] ??= []) as Record<string, unknown>[];
      const index = Number(match[2]);
      cursor = (list[index] ??= {});
    } else {
      cursor = (cursor[segment] ??= {}) as Record<string, unknown>;
    }
  }
  const leaf = segments[segments.length - 1] as string;
  const match = /^(.*)\[(\d+)\]$/.exec(leaf);
  if (match) {
    const list = (cursor[match[1] as string] ??= []) as unknown[];
    list[Number(match[2])] = value;
  } else {
    cursor[leaf] = value;
  }
}

function clone(value: ConfigDocument): ConfigDocument {
  return JSON.parse(JSON.stringify(value)) as ConfigDocument;
}

export class Wizard {
  private schema: SchemaNode;
  private draft: ConfigDocument;
  step: number = 1;

  constructor(schema: SchemaNode, prefill?: ConfigDocument) {
    this.schema = schema;
    this.draft = prefill ? clone(prefill) : {};
  }

  /** Set one field by its dotted config path, e.g. "hiding.blur_level". */
  setField(path: string, value: unknown): void {
    setPath(this.draft, path, value);
  }

  addOverlay(kind: string): void {
    const overlays = (this.draft["overlays"] ??= []) as unknown[];
    overlays.push({ kind });
  }

  removeOverlay(index: number): void {
    const overlays = (this.draft["overlays"] ?? []) as unknown[];
    overlays.splice(index, 1);
  }

  /** All validation errors in the draft, server path convention. */
  allErrors(): Map<string, string> {
    const errors = new Map<string, string>();
    const schemaErrors = validateDocument(this.schema, this.draft);
    for (const error of [...schemaErrors, ...crossFieldErrors(this.draft)]) {
      if (!errors.has(error.path)) errors.set(error.path, error.message);
    }
    return errors;
  }

  /** Errors owned by the current step; these gate advancement. */
  stepErrors(): Map<string, string> {
    const owned = new Map<string, string>();
    for (const [path, message] of this.allErrors()) {
      if (ownedBy(this.step, path)) owned.set(path, message);
    }
    return owned;
  }

  /** Advance if the current step is clean. Returns whether it moved. */
  next(): boolean {
    if (this.step >= STEP_COUNT) return false;
    if (this.stepErrors().size > 0) return false;
    this.step += 1;
    return true;
  }

  /** Step back, preserving every entered value. */
  back(): boolean {
    if (this.step <= 1) return false;
    this.step -= 1;
    return true;
  }

  /** Jump a server-reported error path to the step that owns it. */
  stepForPath(errorPath: string): number {
    for (let step = 1; step <= STEP_COUNT; step++) {
      if (ownedBy(step, errorPath)) return step;
    }
    return 1;
  }

  get canSubmit(): boolean {
    return this.step === STEP_COUNT && this.allErrors().size === 0;
  }

  /** The document as entered; only submit when canSubmit holds. */
  buildConfig(): ConfigDocument {
    return clone(this.draft);
  }
}
