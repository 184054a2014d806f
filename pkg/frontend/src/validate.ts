/**
 * Client-side evaluation of the subset of JSON Schema the manager
 * actually serves: typed scalars, enums, numeric bounds, fixed-shape
 * objects, and bounded arrays. Error paths use the same dotted form
 * the server reports ("hiding.blur_level", "overlays[0].kind") so a
 * 422 from a stale schema can be rendered at the same place a local
 * failure would be.
 */

import type { SchemaNode } from "./schema.js";

export interface ValidationError {
  path: string;
  message: string;
}

const ROOT = "(document root)";

function describe(value: unknown): string {
  if (value === null) return "null";
  if (Array.isArray(value)) return "array";
  return typeof value;
}

function typeMatches(type: string, value: unknown): boolean {
  switch (type) {
    case "object":
      return typeof value === "object" && value !== null && !Array.isArray(value);
    case "array":
      return Array.isArray(value);
    case "string":
      return typeof value === "string";
    case "boolean":
      return typeof value === "boolean";
    case "integer":
      return typeof value === "number" && Number.isInteger(value);
    case "number":
      return typeof value === "number" && Number.isFinite(value);
    default:
      return true;
  }
}

function check(node: SchemaNode, value: unknown, path: string, out: ValidationError[]): void {
  const label = path || ROOT;

  if (node.enum) {
    if (!node.enum.some((option) => option === value)) {
      out.push({
        path: label,
        message: `${JSON.stringify(value)} is not one of ${JSON.stringify(node.enum)}`,
      });
    }
    return;
  }

  if (node.type && !typeMatches(node.type, value)) {
    out.push({ path: label, message: `expected ${node.type}, got ${describe(value)}` });
    return;
  }

  if (typeof value === "number") {
    if (node.minimum !== undefined && value < node.minimum) {
      out.push({ path: label, message: `${value} is less than the minimum of ${node.minimum}` });
    }
    if (node.maximum !== undefined && value > node.maximum) {
      out.push({ path: label, message: `${value} is greater than the maximum of ${node.maximum}` });
    }
    if (node.exclusiveMinimum !== undefined && value <= node.exclusiveMinimum) {
      out.push({
        path: label,
        message: `${value} is less than or equal to the minimum of ${node.exclusiveMinimum}`,
      });
    }
    if (node.exclusiveMaximum !== undefined && value >= node.exclusiveMaximum) {
      out.push({
        path: label,
        message: `${value} is greater than or equal to the maximum of ${node.exclusiveMaximum}`,
      });
    }
  }

  if (Array.isArray(value)) {
    if (node.minItems !== undefined && value.length < node.minItems) {
      out.push({ path: label, message: `needs at least ${node.minItems} items` });
    }
    if (node.maxItems !== undefined && value.length > node.maxItems) {
      out.push({ path: label, message: `allows at most ${node.maxItems} items` });
    }
    if (node.items) {
      value.forEach((entry, index) => {
        check(node.items as SchemaNode, entry, `${path}[${index}]`, out);
      });
    }
  }

  if (node.type === "object" && typeof value === "object" && value !== null) {
    const record = value as Record<string, unknown>;
    for (const key of node.required ?? []) {
      if (!(key in record)) {
        out.push({ path: label, message: `'${key}' is a required property` });
      }
    }
    for (const [key, entry] of Object.entries(record)) {
      const child = node.properties?.[key];
      if (child) {
        check(child, entry, path ? `${path}.${key}` : key, out);
      } else if (node.additionalProperties === false) {
        out.push({ path: label, message: `unexpected property '${key}'` });
      }
    }
  }
}

export function validateDocument(schema: SchemaNode, document: unknown): ValidationError[] {
  const errors: ValidationError[] = [];
  check(schema, document, "", errors);
  return errors;
}

function section(document: Record<string, unknown>, key: string): Record<string, unknown> {
  const value = document[key];
  return typeof value === "object" && value !== null ? (value as Record<string, unknown>) : {};
}

/**
 * The engine's defaults for fields that participate in ordering rules.
 * A document that sets only one side is still judged against the
 * server default for the other, so the client has to know them. The
 * parity suite catches any drift.
 */
export const PAIRED_DEFAULTS = {
  cannyLow: 20.0,
  cannyHigh: 60.0,
  pitchWindowMs: 25.0,
  pitchHopMs: 12.5,
} as const;

function num(value: unknown, fallback: number): number {
  return typeof value === "number" ? value : fallback;
}

/**
 * Rules the engine enforces that a JSON Schema cannot express. The
 * server reports these against the whole section; pointing at the
 * specific field is kinder in a form.
 */
export function crossFieldErrors(document: unknown): ValidationError[] {
  if (typeof document !== "object" || document === null) return [];
  const errors: ValidationError[] = [];
  const hiding = section(document as Record<string, unknown>, "hiding");

  const canny = section(hiding, "canny");
  if ("low_threshold" in canny || "high_threshold" in canny) {
    const low = num(canny["low_threshold"], PAIRED_DEFAULTS.cannyLow);
    const high = num(canny["high_threshold"], PAIRED_DEFAULTS.cannyHigh);
    if (!(low < high)) {
      const target = "high_threshold" in canny ? "high_threshold" : "low_threshold";
      errors.push({
        path: `hiding.canny.${target}`,
        message: `thresholds must satisfy low < high, got (${low}, ${high})`,
      });
    }
  }

  const window = hiding["median_window"];
  if (typeof window === "number" && Number.isInteger(window) && window % 2 === 0) {
    errors.push({ path: "hiding.median_window", message: `must be odd, got ${window}` });
  }

  const pitch = section(section(document as Record<string, unknown>, "voice"), "pitch");
  if ("window_ms" in pitch || "hop_ms" in pitch) {
    const windowMs = num(pitch["window_ms"], PAIRED_DEFAULTS.pitchWindowMs);
    const hopMs = num(pitch["hop_ms"], PAIRED_DEFAULTS.pitchHopMs);
    if (windowMs <= hopMs) {
      const target = "hop_ms" in pitch ? "hop_ms" : "window_ms";
      errors.push({
        path: `voice.pitch.${target}`,
        message: `need hop shorter than window, got (${windowMs}, ${hopMs})`,
      });
    }
  }
  return errors;
}
