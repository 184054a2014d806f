import { describe, expect, test } from "vitest";

import { crossFieldErrors, validateDocument } from "../src/validate.js";
import { liveSchema } from "./engine.js";

const schema = liveSchema();

function paths(document: unknown): string[] {
  return validateDocument(schema, document).map((error) => error.path);
}

describe("client-side schema evaluation", () => {
  test("an empty document is valid; every field has a server default", () => {
    expect(validateDocument(schema, {})).toEqual([]);
  });

  test("a full sensible document is valid", () => {
    expect(
      validateDocument(schema, {
        hiding: { strategy: "blur", blur_level: 7, scope: "persons" },
        overlays: [{ kind: "skeleton", style: { color: [0, 255, 0], thickness: 2 } }],
        voice: { strategy: "switch", mcadams: { alpha: 0.8 }, pitch: { ratio: 0.9 } },
        exports: { kinematics_json: true, kinematics_csv: false },
        confidence_threshold: 0.5,
      }),
    ).toEqual([]);
  });

  test("errors carry the server's dotted path convention", () => {
    expect(paths({ hiding: { blur_level: 11 } })).toEqual(["hiding.blur_level"]);
    expect(paths({ overlays: [{ kind: "sparkles" }] })).toEqual(["overlays[0].kind"]);
    expect(paths({ voice: { mcadams: { alpha: 0 } } })).toEqual(["voice.mcadams.alpha"]);
  });

  test("a missing required overlay kind points at the item", () => {
    expect(paths({ overlays: [{ style: {} }] })).toEqual(["overlays[0]"]);
  });

  test("unknown properties are rejected where they appear", () => {
    expect(paths({ bogus: 1 })).toEqual(["(document root)"]);
    expect(paths({ hiding: { sparkle: true } })).toEqual(["hiding"]);
  });

  test("exclusive bounds are strict", () => {
    expect(paths({ voice: { mcadams: { alpha: 0.0001 } } })).toEqual([]);
    expect(paths({ voice: { mcadams: { alpha: 0 } } })).toEqual(["voice.mcadams.alpha"]);
    expect(paths({ hiding: { canny: { sigma: 0 } } })).toEqual(["hiding.canny.sigma"]);
  });

  test("type mismatches are caught", () => {
    expect(paths({ confidence_threshold: "half" })).toEqual(["confidence_threshold"]);
    expect(paths({ hiding: { blur_level: 2.5 } })).toEqual(["hiding.blur_level"]);
    expect(paths({ overlays: { kind: "skeleton" } })).toEqual(["overlays"]);
  });

  test("array cardinality is enforced", () => {
    expect(paths({ overlays: [{ kind: "skeleton", style: { color: [1, 2] } }] })).toEqual([
      "overlays[0].style.color",
    ]);
    const nine = Array.from({ length: 9 }, () => ({ kind: "skeleton" }));
    expect(paths({ overlays: nine })).toEqual(["overlays"]);
  });
});

describe("rules the schema cannot carry", () => {
  test("edge detection thresholds must be ordered", () => {
    const bad = { hiding: { canny: { low_threshold: 80, high_threshold: 60 } } };
    expect(crossFieldErrors(bad).map((error) => error.path)).toEqual([
      "hiding.canny.high_threshold",
    ]);
    expect(crossFieldErrors({ hiding: { canny: { low_threshold: 20, high_threshold: 60 } } })).toEqual([]);
    // one threshold alone is judged against the server default for the other
    expect(crossFieldErrors({ hiding: { canny: { low_threshold: 20 } } })).toEqual([]);
    expect(crossFieldErrors({ hiding: { canny: { low_threshold: 94.5 } } }).map((error) => error.path)).toEqual([
      "hiding.canny.low_threshold",
    ]);
    expect(crossFieldErrors({ hiding: { canny: { high_threshold: 15 } } }).map((error) => error.path)).toEqual([
      "hiding.canny.high_threshold",
    ]);
  });

  test("the inpaint window must be odd", () => {
    expect(crossFieldErrors({ hiding: { median_window: 4 } }).map((error) => error.path)).toEqual([
      "hiding.median_window",
    ]);
    expect(crossFieldErrors({ hiding: { median_window: 5 } })).toEqual([]);
  });

  test("the pitch hop must fit inside its window", () => {
    const bad = { voice: { pitch: { window_ms: 10, hop_ms: 50 } } };
    expect(crossFieldErrors(bad).map((error) => error.path)).toEqual(["voice.pitch.hop_ms"]);
    expect(crossFieldErrors({ voice: { pitch: { window_ms: 50, hop_ms: 10 } } })).toEqual([]);
    // single-sided draws fall back to the engine defaults (25 / 12.5)
    expect(crossFieldErrors({ voice: { pitch: { hop_ms: 40 } } }).map((error) => error.path)).toEqual([
      "voice.pitch.hop_ms",
    ]);
    expect(crossFieldErrors({ voice: { pitch: { window_ms: 10 } } }).map((error) => error.path)).toEqual([
      "voice.pitch.window_ms",
    ]);
    expect(crossFieldErrors({ voice: { pitch: { hop_ms: 20 } } })).toEqual([]);
  });
});
