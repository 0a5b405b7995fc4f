import type {
  AnnotationAck,
  BatchResponse,
  ProgressInfo,
  SessionInfo,
} from "./types.js";

export type FetchLike = (
  input: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ status: number; json(): Promise<unknown> }>;

/** Error carrying the HTTP status so callers can branch on 409/422. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchImpl: FetchLike = (input, init) =>
      fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: Parameters<FetchLike>[1]): Promise<T> {
    const resp = await this.fetchImpl(this.base + path, init);
    const body = (await resp.json()) as T & { error?: string };
    if (resp.status !== 200) {
      throw new ApiError(resp.status, body?.error ?? `HTTP ${resp.status}`);
    }
    return body;
  }

  session(): Promise<SessionInfo> {
    return this.request<SessionInfo>("/session");
  }

  batch(n: number): Promise<BatchResponse> {
    return this.request<BatchResponse>(`/batch?n=${n}`);
  }

  progress(): Promise<ProgressInfo> {
    return this.request<ProgressInfo>("/progress");
  }

  annotate(position: string, tag: string, annotator: string): Promise<AnnotationAck> {
    return this.request<AnnotationAck>("/annotation", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ position, tag, annotator }),
    });
  }
}
