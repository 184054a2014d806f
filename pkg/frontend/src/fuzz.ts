/**
 * Seeded random walks through the wizard, used by the schema-parity
 * property test. Values are drawn from the same field descriptors the
 * real controls render from, so "constructible through the wizard"
 * means exactly what a user could click together.
 */

import type { ConfigDocument } from "./api.js";
import { fieldSpec, leafControls, type FieldSpec, type SchemaNode } from "./schema.js";
import { PAIRED_DEFAULTS } from "./validate.js";
import { Wizard, STEP_COUNT } from "./wizard.js";

/** mulberry32; tiny, deterministic, good enough for test-case generation */
export function seededRng(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function pick<T>(rng: () => number, items: readonly T[]): T {
  const index = Math.floor(rng() * items.length);
  return items[Math.min(index, items.length - 1)] as T;
}

function randomScalar(rng: () => number, spec: FieldSpec): unknown {
  switch (spec.control) {
    case "select":
      return pick(rng, spec.options);
    case "range":
      return spec.min + Math.floor(rng() * (spec.max - spec.min + 1));
    case "number": {
      const low = spec.exclusiveMin !== undefined ? spec.exclusiveMin : (spec.min ?? 0);
      const high = spec.max ?? low + 100;
      let value = low + rng() * (high - low);
      if (spec.exclusiveMin !== undefined && value <= spec.exclusiveMin) {
        value = spec.exclusiveMin + (high - spec.exclusiveMin) * 0.5;
      }
      if (spec.integer) value = Math.max(Math.ceil(low), Math.round(value));
      return value;
    }
    case "toggle":
      return rng() < 0.5;
    default:
      return undefined;
  }
}

/**
 * Fill a random subset of a group's leaf controls at their config paths.
 * Tuple controls (the color triple) are filled whole or not at all.
 */
function fillGroup(rng: () => number, wizard: Wizard, spec: FieldSpec, density: number): void {
  if (spec.control === "group") {
    for (const field of spec.fields) fillGroup(rng, wizard, field, density);
    return;
  }
  if (rng() >= density) return;
  if (spec.control === "tuple") {
    const values = Array.from({ length: spec.size }, () => randomScalar(rng, spec.item));
    wizard.setField(spec.path, values);
    return;
  }
  if (spec.control === "list") return; // lists are driven by addOverlay below
  const value = randomScalar(rng, spec);
  if (value !== undefined) wizard.setField(spec.path, value);
}

/**
 * The cross-field rules a raw draw can trip; fixed the way a user
 * would after reading the inline message.
 */
function repair(rng: () => number, wizard: Wizard): void {
  const draft = wizard.buildConfig();
  const hiding = (draft["hiding"] ?? {}) as Record<string, unknown>;
  const canny = (hiding["canny"] ?? {}) as Record<string, unknown>;
  if ("low_threshold" in canny || "high_threshold" in canny) {
    // an absent side falls back to the engine default on the server
    const low =
      typeof canny["low_threshold"] === "number"
        ? canny["low_threshold"]
        : PAIRED_DEFAULTS.cannyLow;
    const high =
      typeof canny["high_threshold"] === "number"
        ? canny["high_threshold"]
        : PAIRED_DEFAULTS.cannyHigh;
    if (low >= high) {
      wizard.setField("hiding.canny.high_threshold", low + 1 + rng() * 40);
    }
  }
  const window = hiding["median_window"];
  if (typeof window === "number" && window % 2 === 0) {
    wizard.setField("hiding.median_window", window - 1); // 3..99 stays in range
  }
  const voice = (draft["voice"] ?? {}) as Record<string, unknown>;
  const pitch = (voice["pitch"] ?? {}) as Record<string, unknown>;
  if ("window_ms" in pitch || "hop_ms" in pitch) {
    const windowMs =
      typeof pitch["window_ms"] === "number"
        ? pitch["window_ms"]
        : PAIRED_DEFAULTS.pitchWindowMs;
    const hopMs =
      typeof pitch["hop_ms"] === "number" ? pitch["hop_ms"] : PAIRED_DEFAULTS.pitchHopMs;
    if (windowMs <= hopMs) {
      wizard.setField("voice.pitch.hop_ms", windowMs / 2);
    }
  }
}

/** Walk the wizard end to end with seeded choices; returns the document. */
export function randomWizardConfig(schema: SchemaNode, seed: number): ConfigDocument {
  const rng = seededRng(seed);
  const wizard = new Wizard(schema);
  const root = schema as SchemaNode;

  // step 1: hiding kernel plus its knobs, sometimes a threshold
  fillGroup(rng, wizard, fieldSpec(root.properties?.["hiding"] ?? {}, "hiding"), 0.6);
  if (rng() < 0.5) {
    wizard.setField("confidence_threshold", Math.round(rng() * 100) / 100);
  }
  repair(rng, wizard);
  if (!wizard.next()) throw new Error("step 1 refused a schema-drawn draft");

  // step 2: zero to three overlay layers with partial styles
  const overlaySpec = fieldSpec(root.properties?.["overlays"] ?? {}, "overlays");
  const itemSpec = overlaySpec.control === "list" ? overlaySpec.item : undefined;
  const kinds =
    itemSpec && itemSpec.control === "group"
      ? leafControls(itemSpec).find((leaf) => leaf.name === "kind")
      : undefined;
  const layerCount = Math.floor(rng() * 4);
  for (let i = 0; i < layerCount; i++) {
    const kind = kinds && kinds.control === "select" ? pick(rng, kinds.options) : "skeleton";
    wizard.addOverlay(kind);
    if (itemSpec && itemSpec.control === "group") {
      for (const field of itemSpec.fields) {
        if (field.name === "kind") continue;
        const rebased: FieldSpec = JSON.parse(
          JSON.stringify(field).split(`"overlays[].`).join(`"overlays[${i}].`),
        );
        fillGroup(rng, wizard, rebased, 0.4);
      }
    }
  }
  if (!wizard.next()) throw new Error("step 2 refused a schema-drawn draft");

  // step 3: audio treatment
  fillGroup(rng, wizard, fieldSpec(root.properties?.["voice"] ?? {}, "voice"), 0.5);
  repair(rng, wizard);
  if (!wizard.next()) throw new Error("step 3 refused a schema-drawn draft");

  // step 4: exports
  fillGroup(rng, wizard, fieldSpec(root.properties?.["exports"] ?? {}, "exports"), 0.7);
  if (wizard.step !== STEP_COUNT || !wizard.canSubmit) {
    throw new Error("wizard refused to finish a schema-drawn draft");
  }
  return wizard.buildConfig();
}
