/** Thin fetch client for the generation service. */

import type { ApiErrorBody, EpisodeList, GenerateRequest, Job, ResultMeta } from "./types.js";

export class ApiError extends Error {
  status: number;
  field?: string;
  constructor(status: number, body: ApiErrorBody) {
    super(body.error);
    this.status = status;
    this.field = body.field;
  }
}

export class Client {
  constructor(readonly base: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await fetch(this.base + path, init);
    if (!res.ok) {
      let body: ApiErrorBody;
      try {
        body = (await res.json()) as ApiErrorBody;
      } catch {
        body = { error: `HTTP ${res.status}` };
      }
      throw new ApiError(res.status, body);
    }
    return (await res.json()) as T;
  }

  /** Submit a generation request; the body is sent exactly as serialized. */
  submitGenerate(req: GenerateRequest): Promise<{ id: string }> {
    return this.request("/api/jobs", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ kind: "GENERATE", request: req }),
    });
  }

  getJob(id: string): Promise<Job> {
    return this.request(`/api/jobs/${id}`);
  }

  listEpisodes(): Promise<EpisodeList> {
    return this.request("/api/episodes");
  }

  episodeMeta(id: string): Promise<Record<string, unknown>> {
    return this.request(`/api/episodes/${id}/meta`);
  }

  listCheckpoints(): Promise<{ checkpoints: { id: string; kind: string }[] }> {
    return this.request("/api/checkpoints");
  }

  resultMeta(jobId: string): Promise<ResultMeta> {
    return this.request(`/api/results/${jobId}/meta`);
  }

  resultMetrics(jobId: string): Promise<Record<string, unknown>> {
    return this.request(`/api/results/${jobId}/metrics`);
  }

  episodeFrameURL(id: string): string {
    return `${this.base}/api/episodes/${id}/frame0.png`;
  }

  resultFrameURL(jobId: string, stream: "rgb" | "depth", frame: number): string {
    return `${this.base}/api/results/${jobId}/${stream}/${frame}.png`;
  }

  /**
   * Poll a job once per interval until DONE (resolve) or FAILED (reject).
   * At most one in-flight job per tab, so a plain loop is enough.
   */
  async pollJob(id: string, intervalMs = 1000, maxAttempts = 600): Promise<Job> {
    for (let attempt = 0; attempt < maxAttempts; attempt++) {
      const job = await this.getJob(id);
      if (job.state === "DONE") return job;
      if (job.state === "FAILED") throw new Error(job.error ?? "job failed");
      await new Promise((r) => setTimeout(r, intervalMs));
    }
    throw new Error("job polling timed out");
  }
}
