/**
 * Test-only bridge to the Python engine: fetches the real served
 * schema and batch-validates config documents through the same
 * validate_config the manager runs, one spawned interpreter per batch.
 */

import { execFileSync } from "node:child_process";
import { fileURLToPath } from "node:url";

import type { SchemaNode } from "../src/schema.js";

const REPO_ROOT = fileURLToPath(new URL("../..", import.meta.url));

function runPython(script: string, input?: string): string {
  return execFileSync("python3", ["-c", script], {
    cwd: REPO_ROOT,
    input: input ?? "",
    encoding: "utf-8",
    maxBuffer: 64 * 1024 * 1024,
  });
}

const PRELUDE = `
import json, sys
sys.path.insert(0, "src")
from avmask.pipeline.config import CONFIG_SCHEMA, validate_config
from avmask.errors import ConfigError
`;

export function liveSchema(): SchemaNode {
  const out = runPython(`${PRELUDE}\nprint(json.dumps(CONFIG_SCHEMA))`);
  return JSON.parse(out) as SchemaNode;
}

export interface Verdict {
  ok: boolean;
  message?: string;
  path?: string;
}

/** One line in, one verdict out, all through a single interpreter. */
export function validateBatch(documents: unknown[]): Verdict[] {
  const script = `${PRELUDE}
for line in sys.stdin:
    line = line.strip()
    if not line:
        continue
    try:
        validate_config(json.loads(line))
        print(json.dumps({"ok": True}))
    except ConfigError as err:
        print(json.dumps({"ok": False, "message": str(err), "path": err.path}))
`;
  const input = documents.map((doc) => JSON.stringify(doc)).join("\n") + "\n";
  const out = runPython(script, input);
  const verdicts = out
    .trim()
    .split("\n")
    .filter(Boolean)
    .map((line) => JSON.parse(line) as Verdict);
  if (verdicts.length !== documents.length) {
    throw new Error(`sent ${documents.length} documents, got ${verdicts.length} verdicts`);
  }
  return verdicts;
}
