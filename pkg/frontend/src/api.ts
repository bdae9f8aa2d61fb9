/**
 * Typed client for the /api/v1 endpoints with latest-wins cancellation:
 * when inputs change while a request is in flight, the stale request is
 * aborted so responses can never arrive out of order.
 */

import type {
  ApiEnvelope,
  DesignParsePayload,
  SeriesPayload,
  SolveBody,
  SolveResultPayload,
  SweepBody,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    message: string,
    public readonly code: string,
    public readonly status: number,
    public readonly field?: string | null,
    public readonly line?: number,
    public readonly column?: number,
  ) {
    super(message);
  }
}

async function post<T>(url: string, body: unknown, signal?: AbortSignal): Promise<T> {
  const response = await fetch(url, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(body),
    signal,
  });
  const envelope = (await response.json()) as ApiEnvelope<T>;
  if (envelope.status !== "ok" || envelope.result === undefined) {
    const err = envelope.error ?? { code: "unknown", message: `HTTP ${response.status}` };
    throw new ApiError(err.message, err.code, response.status, err.field, err.line, err.column);
  }
  return envelope.result;
}

export class ApiClient {
  constructor(private readonly base: string = "") {}

  solve(body: SolveBody, signal?: AbortSignal): Promise<SolveResultPayload> {
    return post(`${this.base}/api/v1/solve`, body, signal);
  }

  sweep(body: SweepBody, signal?: AbortSignal): Promise<{ axis: string; series: SeriesPayload[] }> {
    return post(`${this.base}/api/v1/sweep`, body, signal);
  }

  parseDesign(csv: string, signal?: AbortSignal): Promise<DesignParsePayload> {
    return post(`${this.base}/api/v1/design/parse`, { csv }, signal);
  }

  async health(): Promise<{ status: string; version: string }> {
    const response = await fetch(`${this.base}/healthz`);
    return response.json();
  }
}

/** Serializes concurrent calls: starting a new one aborts the previous. */
export function latestWins(): <T>(run: (signal: AbortSignal) => Promise<T>) => Promise<T | null> {
  let controller: AbortController | null = null;
  return async (run) => {
    controller?.abort();
    controller = new AbortController();
    const mine = controller;
    try {
      return await run(mine.signal);
    } catch (error) {
      if (mine.signal.aborted) return null; // superseded; caller ignores
      throw error;
    }
  };
}
