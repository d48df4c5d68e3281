import type {
  CommitRecord,
  HierarchyPayload,
  LogPayload,
  PosteriorPayload,
  SessionInfo,
  VoiPayload,
  WhatIfPayload,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

/** Thin typed client; every method maps to exactly one endpoint. */
export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(
    method: "GET" | "POST",
    path: string,
    params?: Record<string, string>,
    body?: unknown,
  ): Promise<T> {
    let url = this.baseUrl + path;
    if (params && Object.keys(params).length > 0) {
      url += "?" + new URLSearchParams(params).toString();
    }
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(url, init);
    const text = await response.text();
    if (!response.ok) {
      let detail = text;
      try {
        const parsed = JSON.parse(text) as { detail?: string };
        if (typeof parsed.detail === "string") detail = parsed.detail;
      } catch {
        // non-JSON error body: surface it verbatim
      }
      throw new ApiError(response.status, detail);
    }
    return JSON.parse(text) as T;
  }

  createSession(scenario: string | object): Promise<SessionInfo> {
    return this.request("POST", "/sessions", undefined, { scenario });
  }

  hierarchy(sessionId: string): Promise<HierarchyPayload> {
    return this.request("GET", `/sessions/${sessionId}/hierarchy`);
  }

  posterior(sessionId: string, structure: string): Promise<PosteriorPayload> {
    return this.request("GET", `/sessions/${sessionId}/posterior`, { structure });
  }

  postEvidence(sessionId: string, structure: string, obs: string): Promise<PosteriorPayload> {
    return this.request("POST", `/sessions/${sessionId}/evidence`, undefined, {
      structure,
      obs,
    });
  }

  whatIf(sessionId: string, structure: string): Promise<WhatIfPayload> {
    return this.request("POST", `/sessions/${sessionId}/whatif`, undefined, { structure });
  }

  commit(
    sessionId: string,
    structure: string,
    action: string,
    expectedStep: number,
  ): Promise<CommitRecord> {
    return this.request("POST", `/sessions/${sessionId}/commit`, undefined, {
      structure,
      action,
      expected_step: expectedStep,
    });
  }

  voi(sessionId: string, kind: string, extra: Record<string, string> = {}): Promise<VoiPayload> {
    return this.request("GET", `/sessions/${sessionId}/voi`, { kind, ...extra });
  }

  log(sessionId: string): Promise<LogPayload> {
    return this.request("GET", `/sessions/${sessionId}/log`);
  }
}
