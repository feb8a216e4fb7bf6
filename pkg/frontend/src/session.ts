/**
 * Session view state and the answer flow.
 *
 * The view is a pure function of the last server responses: every
 * mutation round-trips through the service and then re-fetches the
 * pending query, embedding, and stats.  The only client-side transform
 * is cosmetic sign-flip smoothing of embedding axes, which keeps the
 * scatter from mirroring between updates (eigenvectors are only defined
 * up to sign).
 */

import {
  ApiError,
  EmbeddingDto,
  EmbeddingPoint,
  ObjectDto,
  QueryDto,
  SessionClient,
  StatsDto,
} from "./api.js";

export type ConnectionState = "idle" | "busy" | "error";

export interface SessionView {
  sessionId: string;
  objects: ObjectDto[];
  query: QueryDto | null;
  embedding: EmbeddingPoint[];
  stats: StatsDto | null;
  connection: ConnectionState;
  lastError: string | null;
}

/** Flip each axis of `next` so it correlates positively with `prev`. */
export function alignSigns(
  prev: EmbeddingPoint[],
  next: EmbeddingPoint[],
): EmbeddingPoint[] {
  if (prev.length === 0 || next.length === 0) return next;
  const dims = next[0]!.coords.length;
  const byIndex = new Map(prev.map((p) => [p.index, p]));
  const flips: number[] = [];
  for (let axis = 0; axis < dims; axis++) {
    let dot = 0;
    for (const p of next) {
      const old = byIndex.get(p.index);
      if (old && axis < old.coords.length) {
        dot += (old.coords[axis] ?? 0) * (p.coords[axis] ?? 0);
      }
    }
    flips.push(dot < 0 ? -1 : 1);
  }
  if (flips.every((f) => f === 1)) return next;
  return next.map((p) => ({
    ...p,
    coords: p.coords.map((x, axis) => x * flips[axis]!),
  }));
}

export class SessionController {
  view: SessionView;
  private inFlight = false;

  constructor(
    private readonly client: SessionClient,
    sessionId: string,
    objects: ObjectDto[],
    private readonly embeddingDims = 2,
  ) {
    this.view = {
      sessionId,
      objects,
      query: null,
      embedding: [],
      stats: null,
      connection: "idle",
      lastError: null,
    };
  }

  static async open(
    client: SessionClient,
    sessionId: string,
    embeddingDims = 2,
  ): Promise<SessionController> {
    const { objects } = await client.getObjects(sessionId);
    const controller = new SessionController(client, sessionId, objects, embeddingDims);
    await controller.refresh();
    return controller;
  }

  /** Re-fetch query, embedding, and stats (reads may overlap answers). */
  async refresh(): Promise<SessionView> {
    const id = this.view.sessionId;
    const [query, embedding, stats] = await Promise.all([
      this.client.getQuery(id),
      this.client.getEmbedding(id, this.embeddingDims),
      this.client.getStats(id),
    ]);
    this.applyEmbedding(embedding);
    this.view = { ...this.view, query, stats, connection: "idle", lastError: null };
    return this.view;
  }

  /**
   * Post the clicked option for the displayed query, then refresh.
   * Only one mutation may be in flight; extra clicks are ignored.  A
   * StaleQuery rejection (the answer raced an earlier accepted one) is
   * absorbed by re-fetching the server's pending query.
   */
  async answer(chosen: number): Promise<SessionView> {
    const query = this.view.query;
    if (!query) throw new Error("no query displayed");
    if (this.inFlight) return this.view;
    this.inFlight = true;
    this.view = { ...this.view, connection: "busy" };
    try {
      await this.client.postAnswer(this.view.sessionId, query.query_id, chosen);
      return await this.refresh();
    } catch (err) {
      if (err instanceof ApiError && err.code === "stale_query") {
        return await this.refresh();
      }
      this.view = {
        ...this.view,
        connection: "error",
        lastError: err instanceof Error ? err.message : String(err),
      };
      return this.view;
    } finally {
      this.inFlight = false;
    }
  }

  /** After a failed answer: recover by re-fetching the pending query. */
  async retry(): Promise<SessionView> {
    return this.refresh();
  }

  private applyEmbedding(dto: EmbeddingDto): void {
    this.view = {
      ...this.view,
      embedding: alignSigns(this.view.embedding, dto.points),
    };
  }
}
