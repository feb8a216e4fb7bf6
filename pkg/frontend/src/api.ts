/**
 * Typed client for the session service HTTP+JSON API.
 *
 * All responses are passed through untouched — the client does no kernel
 * math.  Every method either resolves with the parsed body or rejects
 * with an {@link ApiError} carrying the server's {code, message} payload.
 */

export interface QueryDto {
  query_id: string;
  head: number;
  options: [number, number];
}

export interface AnswerReport {
  triplet: [number, number, number];
  gamma: number;
  active: boolean;
  projected: boolean;
  skipped_projection: boolean;
  eig_lower_bound: number;
  replay_steps: number;
  answers: number;
}

export interface EmbeddingPoint {
  index: number;
  label: string | null;
  coords: number[];
}

export interface EmbeddingDto {
  k: number;
  points: EmbeddingPoint[];
}

export interface StatsDto {
  answers: number;
  train_error_over_log: number | null;
  updates: number;
  passive: number;
  eig_computations: number;
  projections_applied: number;
  skips: number;
  eig_lower_bound: number;
}

export interface ObjectDto {
  index: number;
  label?: string;
  image?: string;
}

export interface SessionPolicy {
  policy: "pa_gnmds" | "pa_ste" | "constant";
  beta?: number;
  p?: number;
  delta?: number;
  model?: "ste" | "gnmds";
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (
  input: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
  text(): Promise<string>;
}>;

async function parseError(status: number, resp: { json(): Promise<unknown> }): Promise<ApiError> {
  try {
    const body = (await resp.json()) as { code?: string; message?: string };
    return new ApiError(status, body.code ?? "unknown", body.message ?? `HTTP ${status}`);
  } catch {
    return new ApiError(status, "unknown", `HTTP ${status}`);
  }
}

export class SessionClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch as unknown as FetchLike,
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!resp.ok) throw await parseError(resp.status, resp);
    return (await resp.json()) as T;
  }

  async createSession(
    objects: (string | ObjectDto)[],
    policy?: SessionPolicy,
    seed = 0,
  ): Promise<string> {
    const body = await this.request<{ id: string }>("POST", "/sessions", {
      objects,
      ...(policy ? { policy } : {}),
      seed,
    });
    return body.id;
  }

  getQuery(id: string): Promise<QueryDto> {
    return this.request("GET", `/sessions/${id}/query`);
  }

  postAnswer(id: string, queryId: string, chosen: number): Promise<AnswerReport> {
    return this.request("POST", `/sessions/${id}/answer`, {
      query_id: queryId,
      chosen,
    });
  }

  getEmbedding(id: string, k = 2): Promise<EmbeddingDto> {
    return this.request("GET", `/sessions/${id}/embedding?k=${k}`);
  }

  getStats(id: string): Promise<StatsDto> {
    return this.request("GET", `/sessions/${id}/stats`);
  }

  getObjects(id: string): Promise<{ objects: ObjectDto[] }> {
    return this.request("GET", `/sessions/${id}/objects`);
  }
}
