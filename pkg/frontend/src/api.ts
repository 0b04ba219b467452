/** Thin fetch client for the five service endpoints. */

import type {
  AskResult,
  BenchmarkReport,
  ChunkHit,
  ErrorEnvelope,
  HealthInfo,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly envelope: ErrorEnvelope,
  ) {
    super(`${envelope.code}: ${envelope.message}`);
  }
}

export type FetchLike = (
  input: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ status: number; json(): Promise<unknown> }>;

export class ApiClient {
  private readonly baseUrl: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl?: string, fetchImpl?: FetchLike) {
    this.baseUrl = (
      baseUrl ??
      process.env.FINQA_BASE_URL ??
      "http://127.0.0.1:8040"
    ).replace(/\/$/, "");
    this.fetchImpl = fetchImpl ?? (fetch as unknown as FetchLike);
  }

  private async request<T>(
    path: string,
    init?: { method?: string; body?: unknown },
  ): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, {
      method: init?.method ?? "GET",
      headers: { "content-type": "application/json" },
      body: init?.body === undefined ? undefined : JSON.stringify(init.body),
    });
    if (response.status === 204) {
      return undefined as T;
    }
    const doc = await response.json();
    if (response.status >= 400) {
      throw new ApiError(response.status, doc as ErrorEnvelope);
    }
    return doc as T;
  }

  health(): Promise<HealthInfo> {
    return this.request<HealthInfo>("/v1/health");
  }

  ask(question: string, backendId?: string): Promise<AskResult> {
    return this.request<AskResult>("/v1/ask", {
      method: "POST",
      body: { question, backend_id: backendId ?? null },
    });
  }

  feedback(
    promptHash: string,
    rating: 1 | -1,
    correctedAnswer?: string,
  ): Promise<void> {
    return this.request<void>("/v1/feedback", {
      method: "POST",
      body: {
        prompt_hash: promptHash,
        rating,
        corrected_answer: correctedAnswer ?? null,
      },
    });
  }

  chunks(query: string, k = 8): Promise<ChunkHit[]> {
    const params = new URLSearchParams({ query, k: String(k) });
    return this.request<ChunkHit[]>(`/v1/chunks?${params}`);
  }

  latestBenchmark(): Promise<BenchmarkReport> {
    return this.request<BenchmarkReport>("/v1/benchmarks/latest");
  }
}
