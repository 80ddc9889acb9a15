/**
 * Typed client for the workbench service.  The transport is injectable
 * so tests can drive the client against a scripted backend; the
 * browser entry point passes window.fetch.
 */

import type {
  FrontierEntry,
  JobPayload,
  ReformDoc,
  ScenarioEntry,
} from "./types.js";

export type FetchLike = (url: string, init?: {
  method?: string;
  headers?: Record<string, string>;
  body?: string;
}) => Promise<{ status: number; json(): Promise<unknown> }>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: unknown,
  ) {
    super(typeof detail === "string" ? detail : JSON.stringify(detail));
  }
}

export class WorkbenchClient {
  constructor(
    private readonly base: string,
    private readonly fetchImpl: FetchLike,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(this.base + path, {
      method,
      headers: { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await response.json().catch(() => null);
    if (response.status >= 400) {
      // A duplicate upload still tells us the id it collided with.
      if (response.status === 409 && payload && typeof payload === "object") {
        const detail = (payload as { detail?: { id?: string } }).detail;
        if (detail?.id) {
          return { id: detail.id, duplicate: true } as T;
        }
      }
      throw new ApiError(response.status, (payload as { detail?: unknown })?.detail ?? payload);
    }
    return payload as T;
  }

  async uploadPopulation(document: unknown): Promise<string> {
    const out = await this.request<{ id: string }>("POST", "/populations", document);
    return out.id;
  }

  async uploadCode(document: unknown): Promise<string> {
    const out = await this.request<{ id: string }>("POST", "/codes", document);
    return out.id;
  }

  async submitSolve(populationId: string, codeId: string, reform: ReformDoc,
                    sweepCaps?: number[]): Promise<string> {
    const body: Record<string, unknown> = {
      population_id: populationId,
      code_id: codeId,
      reform,
    };
    if (sweepCaps && sweepCaps.length) {
      body.sweep = { caps: sweepCaps };
    }
    const out = await this.request<{ id: string }>("POST", "/solves", body);
    return out.id;
  }

  async getSolve(jobId: string): Promise<JobPayload> {
    return this.request<JobPayload>("GET", `/solves/${jobId}`);
  }

  async getFrontier(jobId: string): Promise<FrontierEntry[]> {
    const out = await this.request<{ entries: FrontierEntry[] }>(
      "GET", `/solves/${jobId}/frontier`);
    return out.entries;
  }

  async scenarios(): Promise<ScenarioEntry[]> {
    return this.request<ScenarioEntry[]>("GET", "/scenarios");
  }

  /** Poll until the job leaves the queue; terminal states are permanent. */
  async pollSolve(jobId: string, options?: {
    intervalMs?: number;
    timeoutMs?: number;
    onTick?: (status: string) => void;
  }): Promise<JobPayload> {
    const intervalMs = options?.intervalMs ?? 500;
    const timeoutMs = options?.timeoutMs ?? 300_000;
    const startedAt = Date.now();
    for (;;) {
      const payload = await this.getSolve(jobId);
      if (payload.status !== "queued" && payload.status !== "running") {
        return payload;
      }
      options?.onTick?.(payload.status);
      if (Date.now() - startedAt > timeoutMs) {
        throw new Error(`solve ${jobId} did not finish within ${timeoutMs} ms`);
      }
      await new Promise((resolve) => setTimeout(resolve, intervalMs));
    }
  }
}
