/**
 * Job monitoring: a view model derived from the manager's job document
 * plus a polling loop pinned to the manager-advertised interval.
 * Progress shown to the user never decreases, and polling stops the
 * moment a job reaches a terminal state.
 */

import type { JobStatus, ManagerClient } from "./api.js";

export const TERMINAL_STATES = new Set(["done", "failed"]);

export interface JobView {
  id: string;
  state: string;
  /** monotonic display progress in [0, 1] */
  progress: number;
  progressPercent: string;
  terminal: boolean;
  failed: boolean;
  error: string | null;
  previewEnabled: boolean;
  audioAvailable: boolean;
  kinematicsJson: boolean;
  kinematicsCsv: boolean;
  chunksDone: number;
  chunksTotal: number;
}

function exportFlag(config: Record<string, unknown>, key: string): boolean {
  const exports = config["exports"];
  if (typeof exports !== "object" || exports === null) return false;
  return (exports as Record<string, unknown>)[key] === true;
}

/**
 * previous is the progress already shown for this job, if any; the view
 * clamps to it so a requeued chunk never walks the bar backwards.
 */
export function jobView(job: JobStatus, previous = 0): JobView {
  const terminal = TERMINAL_STATES.has(job.state);
  const reported = job.state === "done" ? 1 : job.progress;
  const progress = Math.max(previous, Math.min(1, Math.max(0, reported)));
  return {
    id: job.id,
    state: job.state,
    progress,
    progressPercent: `${Math.round(progress * 100)}%`,
    terminal,
    failed: job.state === "failed",
    error: job.error,
    previewEnabled: job.state === "done",
    audioAvailable: job.state === "done" && job.has_audio,
    kinematicsJson: job.state === "done" && exportFlag(job.config, "kinematics_json"),
    kinematicsCsv: job.state === "done" && exportFlag(job.config, "kinematics_csv"),
    chunksDone: job.chunks.filter((chunk) => chunk.state === "done").length,
    chunksTotal: job.chunks.length,
  };
}

export interface WatchOptions {
  /** seconds between polls; callers pass the manager-advertised value */
  pollInterval: number;
  sleep?: (seconds: number) => Promise<void>;
  onUpdate?: (view: JobView) => void;
}

function defaultSleep(seconds: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, seconds * 1000));
}

/** Poll one job until it is terminal; resolves with the final status. */
export async function watchJob(
  client: Pick<ManagerClient, "job">,
  jobId: string,
  options: WatchOptions,
): Promise<JobStatus> {
  const sleep = options.sleep ?? defaultSleep;
  let shown = 0;
  for (;;) {
    const status = await client.job(jobId);
    const view = jobView(status, shown);
    shown = view.progress;
    options.onUpdate?.(view);
    if (view.terminal) return status;
    await sleep(options.pollInterval);
  }
}
