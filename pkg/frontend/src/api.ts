import type { ErrorWire, SegmentWire, SessionWire } from "./types.js";

export interface HttpResponse {
  status: number;
  json(): Promise<unknown>;
}

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<HttpResponse>;

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;
  readonly stage: string;

  constructor(status: number, code: string, stage: string, message: string) {
    super(message);
    this.status = status;
    this.code = code;
    this.stage = stage;
  }
}

async function parseError(status: number, payload: unknown): Promise<never> {
  const wire = payload as Partial<ErrorWire>;
  const detail = wire?.error;
  throw new ApiError(
    status,
    detail?.code ?? "unknown",
    detail?.stage ?? "",
    detail?.message ?? `HTTP ${status}`,
  );
}

export class Client {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path, {
      method,
      headers: { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await resp.json();
    if (resp.status >= 400) {
      await parseError(resp.status, payload);
    }
    return payload as T;
  }

  ingestVideo(videoId: string, subtitles: string, format?: string) {
    return this.request<{ video_id: string; segments: number }>("POST", "/api/videos", {
      video_id: videoId,
      subtitles,
      format: format ?? null,
    });
  }

  segments(videoId: string) {
    return this.request<SegmentWire[]>("GET", `/api/videos/${encodeURIComponent(videoId)}/segments`);
  }

  createSession(videoId: string, question: string) {
    return this.request<SessionWire>("POST", "/api/sessions", {
      video_id: videoId,
      question,
    });
  }

  answer(sessionId: string, answer: "yes" | "no") {
    return this.request<SessionWire>("POST", `/api/sessions/${sessionId}/answer`, { answer });
  }

  localize(sessionId: string) {
    return this.request<SessionWire>("POST", `/api/sessions/${sessionId}/localize`);
  }

  getSession(sessionId: string) {
    return this.request<SessionWire>("GET", `/api/sessions/${sessionId}`);
  }
}
