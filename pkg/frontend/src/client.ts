import {
  CreateSessionRequest,
  EventView,
  SessionView,
  TmSearchResult,
} from "./types.js";

/** Structured failure from the API's flat error body. */
export class ApiError extends Error {
  readonly status: number;
  readonly code: string;
  readonly requestId: string;

  constructor(status: number, code: string, message: string, requestId = "") {
    super(message);
    this.name = "ApiError";
    this.status = status;
    this.code = code;
    this.requestId = requestId;
  }
}

export interface ClientOptions {
  baseUrl?: string;
  /** Injectable for tests; defaults to the global fetch. */
  fetchFn?: typeof fetch;
  /** Injectable request-id source; defaults to crypto.randomUUID. */
  makeRequestId?: () => string;
}

let fallbackCounter = 0;

function defaultRequestId(): string {
  if (typeof crypto !== "undefined" && typeof crypto.randomUUID === "function") {
    return crypto.randomUUID();
  }
  fallbackCounter += 1;
  return `req-${Date.now()}-${fallbackCounter}`;
}

/**
 * Thin typed wrapper over the workbench HTTP surface.
 *
 * Every mutating call sends a fresh request_id so the server can replay a
 * cached success if the network retries; the client itself never retries.
 */
export class WorkbenchClient {
  private readonly baseUrl: string;
  private readonly fetchFn: typeof fetch;
  private readonly makeRequestId: () => string;

  constructor(options: ClientOptions = {}) {
    this.baseUrl = options.baseUrl ?? "";
    this.fetchFn = options.fetchFn ?? fetch.bind(globalThis);
    this.makeRequestId = options.makeRequestId ?? defaultRequestId;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = {
      method,
      headers: { "Content-Type": "application/json" },
    };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
    }
    const res = await this.fetchFn(this.baseUrl + path, init);
    if (!res.ok) {
      let code = "http_error";
      let message = `status ${res.status}`;
      let requestId = "";
      try {
        const err = await res.json();
        if (err && typeof err.code === "string") code = err.code;
        if (err && typeof err.message === "string") message = err.message;
        if (err && typeof err.request_id === "string") requestId = err.request_id;
      } catch {
        // non-JSON error body; keep the generic message
      }
      throw new ApiError(res.status, code, message, requestId);
    }
    return (await res.json()) as T;
  }

  async health(): Promise<boolean> {
    const res = await this.fetchFn(this.baseUrl + "/healthz");
    return res.ok;
  }

  createSession(body: CreateSessionRequest): Promise<SessionView> {
    return this.request<SessionView>("POST", "/sessions", body);
  }

  getSession(sessionId: string): Promise<SessionView> {
    return this.request<SessionView>("GET", `/sessions/${sessionId}`);
  }

  async getEvents(sessionId: string): Promise<EventView[]> {
    const payload = await this.request<{ events: EventView[] }>(
      "GET",
      `/sessions/${sessionId}/events`,
    );
    return payload.events;
  }

  route(sessionId: string, instruction: string): Promise<SessionView> {
    return this.request<SessionView>("POST", `/sessions/${sessionId}/route`, {
      instruction,
      request_id: this.makeRequestId(),
    });
  }

  override(sessionId: string, dimensions: string[]): Promise<SessionView> {
    return this.request<SessionView>("POST", `/sessions/${sessionId}/override`, {
      dimensions,
      request_id: this.makeRequestId(),
    });
  }

  invoke(sessionId: string): Promise<SessionView> {
    return this.request<SessionView>("POST", `/sessions/${sessionId}/invoke`, {
      request_id: this.makeRequestId(),
    });
  }

  revise(sessionId: string, candidateId: string, instruction: string): Promise<SessionView> {
    return this.request<SessionView>("POST", `/sessions/${sessionId}/revise`, {
      candidate_id: candidateId,
      instruction,
      request_id: this.makeRequestId(),
    });
  }

  synthesize(sessionId: string): Promise<SessionView> {
    return this.request<SessionView>("POST", `/sessions/${sessionId}/synthesize`, {
      request_id: this.makeRequestId(),
    });
  }

  confirm(sessionId: string, candidateId: string): Promise<SessionView> {
    return this.request<SessionView>("POST", `/sessions/${sessionId}/confirm`, {
      candidate_id: candidateId,
      request_id: this.makeRequestId(),
    });
  }

  searchTm(query: string, srcLang: string, tgtLang: string, topK = 5): Promise<TmSearchResult[]> {
    const params = new URLSearchParams({
      q: query,
      src: srcLang,
      tgt: tgtLang,
      k: String(topK),
    });
    return this.request<{ results: TmSearchResult[] }>("GET", `/tm/search?${params}`).then(
      (payload) => payload.results,
    );
  }
}
