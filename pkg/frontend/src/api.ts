/** Thin typed client for the drawing-session service. All state lives on the
 * server; this module only moves JSON. */

import type {
  CreateSessionResponse,
  EditRequest,
  LibraryStrokes,
  SessionSummary,
  StepResponse,
  StrokePayload,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}

export class StudioApi {
  constructor(
    private baseUrl: string,
    private fetchFn: typeof fetch = fetch,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? undefined : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const parsed = (await resp.json()) as { detail?: string };
        if (parsed.detail) detail = parsed.detail;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(resp.status, detail);
    }
    return (await resp.json()) as T;
  }

  health(): Promise<{ status: string; model_ref: string }> {
    return this.request("GET", "/v1/health");
  }

  createSession(body: {
    sketch?: StrokePayload[];
    code?: number[];
    seed?: number;
  }): Promise<CreateSessionResponse> {
    return this.request("POST", "/v1/sessions", body);
  }

  step(sessionId: string): Promise<StepResponse> {
    return this.request("POST", `/v1/sessions/${sessionId}/step`);
  }

  edit(sessionId: string, edit: EditRequest): Promise<{ state_summary: SessionSummary }> {
    return this.request("POST", `/v1/sessions/${sessionId}/edit`, edit);
  }

  getSession(sessionId: string): Promise<SessionSummary> {
    return this.request("GET", `/v1/sessions/${sessionId}`);
  }

  encodeStroke(actions: number[][]): Promise<{ embedding_id: string }> {
    return this.request("POST", "/v1/strokes/encode", { actions });
  }

  libraryCategories(): Promise<{ categories: string[] }> {
    return this.request("GET", "/v1/library/categories");
  }

  libraryStrokes(category: string, count: number): Promise<LibraryStrokes> {
    return this.request(
      "GET",
      `/v1/library/strokes?category=${encodeURIComponent(category)}&count=${count}`,
    );
  }
}
