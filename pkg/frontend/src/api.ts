/**
 * Typed client for the manager's HTTP API. Every request the app makes
 * goes through here; nothing else in the client talks to the network.
 */

export type ConfigDocument = Record<string, unknown>;

export interface Preset {
  name: string;
  description: string;
  config: ConfigDocument;
}

export interface ChunkInfo {
  id: string;
  index: number;
  state: string;
  attempts: number;
  assigned_to: string | null;
  core_start: number;
  core_end: number;
}

export interface JobStatus {
  id: string;
  state: "queued" | "running" | "done" | "failed";
  progress: number;
  created_at: number;
  updated_at: number;
  total_frames: number;
  error: string | null;
  output_ref: string | null;
  has_audio: boolean;
  config: ConfigDocument;
  chunks: ChunkInfo[];
}

export interface SubmitRequest {
  video_path: string;
  audio_path?: string;
  detections_path?: string;
  config?: ConfigDocument;
  preset?: string;
  config_overrides?: ConfigDocument;
}

export class ApiError extends Error {
  status: number;
  path?: string;

  constructor(status: number, message: string, path?: string) {
    super(message);
    this.status = status;
    this.path = path;
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function throwFor(response: Response): Promise<never> {
  let message = `${response.status} ${response.statusText}`;
  let path: string | undefined;
  try {
    const body = (await response.json()) as { message?: string; path?: string };
    if (body.message) message = body.message;
    path = body.path;
  } catch {
    // non-JSON error body, keep the status line
  }
  throw new ApiError(response.status, message, path);
}

export class ManagerClient {
  private base: string;
  private fetchImpl: FetchLike;
  private pollInterval: number | null = null;

  constructor(baseUrl = "", fetchImpl?: FetchLike) {
    this.base = baseUrl.replace(/\/$/, "");
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchImpl(this.base + path, {
      headers: { Accept: "application/json" },
    });
    if (!response.ok) await throwFor(response);
    return (await response.json()) as T;
  }

  private async postJson<T>(path: string, body: unknown): Promise<T> {
    const response = await this.fetchImpl(this.base + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) await throwFor(response);
    return (await response.json()) as T;
  }

  async presets(): Promise<Preset[]> {
    const doc = await this.getJson<{ presets: Preset[] }>("/api/presets");
    return doc.presets;
  }

  configSchema(): Promise<Record<string, unknown>> {
    return this.getJson("/api/config-schema");
  }

  submitJob(request: SubmitRequest): Promise<JobStatus> {
    return this.postJson("/api/jobs", request);
  }

  async listJobs(): Promise<JobStatus[]> {
    const doc = await this.getJson<{ jobs: JobStatus[] }>("/api/jobs");
    return doc.jobs;
  }

  job(id: string): Promise<JobStatus> {
    return this.getJson(`/api/jobs/${id}`);
  }

  /**
   * The manager advertises its polling cadence in the worker-registration
   * response; that is the only place it is published, so the dashboard
   * registers a zero-claim observer once and reuses the answer.
   */
  async advertisedPollInterval(): Promise<number> {
    if (this.pollInterval !== null) return this.pollInterval;
    const doc = await this.postJson<{ poll_interval: number }>(
      "/api/workers/register",
      { capabilities: [] },
    );
    this.pollInterval = doc.poll_interval > 0 ? doc.poll_interval : 1.0;
    return this.pollInterval;
  }

  outputUrl(jobId: string): string {
    return `${this.base}/api/jobs/${jobId}/output`;
  }

  audioUrl(jobId: string): string {
    return `${this.base}/api/jobs/${jobId}/audio`;
  }

  kinematicsUrl(jobId: string, format: "json" | "csv"): string {
    return `${this.base}/api/jobs/${jobId}/kinematics?format=${format}`;
  }
}
