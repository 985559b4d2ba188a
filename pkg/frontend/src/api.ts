/** Typed client for the solve service. The fetch implementation is injected
 * so tests run without a network. */

import type {
  ConfigureResponse,
  EvaluationJson,
  JobPoll,
  ResultDocument,
  Spec,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "Content-Type": "application/json" } };
    if (body !== undefined) init.body = JSON.stringify(body);
    const resp = await this.fetchImpl(this.baseUrl + path, init);
    let payload: unknown = null;
    try {
      payload = await resp.json();
    } catch {
      // non-JSON error bodies fall through to the status check
    }
    if (!resp.ok) {
      const detail =
        payload && typeof payload === "object" && "detail" in payload
          ? String((payload as { detail: unknown }).detail)
          : resp.statusText || "request failed";
      throw new ApiError(resp.status, detail);
    }
    return payload as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("GET", "/api/health");
  }

  configure(prompt: string): Promise<ConfigureResponse> {
    return this.request("POST", "/api/configure", { prompt });
  }

  solve(
    spec: Spec,
    controller: string,
    retries: number,
    framesEvery = 5,
  ): Promise<{ job_id: string; status: string }> {
    return this.request("POST", "/api/solve", {
      spec,
      controller,
      retries,
      frames_every: framesEvery,
    });
  }

  jobStatus(jobId: string): Promise<JobPoll> {
    return this.request("GET", `/api/jobs/${jobId}`);
  }

  jobResult(jobId: string): Promise<ResultDocument> {
    return this.request("GET", `/api/jobs/${jobId}/result`);
  }

  evaluate(spec: Spec, density: number[]): Promise<EvaluationJson> {
    return this.request("POST", "/api/evaluate", { spec, density });
  }

  assess(report: unknown): Promise<{ assessment: string }> {
    return this.request("POST", "/api/assess", { report });
  }
}
