import { describe, expect, it } from "vitest";

import { ApiError, EmbeddingPoint, FetchLike, SessionClient } from "../src/api.js";
import { alignSigns, SessionController } from "../src/session.js";
import { clusterSeparation, oracleChoice, twoClusterPoints } from "../src/scripted.js";

function jsonResponse(status: number, body: unknown) {
  return {
    ok: status < 400,
    status,
    json: async () => body,
    text: async () => JSON.stringify(body),
  };
}

/** Minimal in-memory stand-in for the session service. */
function fakeService() {
  const state = {
    answers: 0,
    counter: 0,
    pending: null as { query_id: string; head: number; options: [number, number] } | null,
    answerDelay: 0,
    failNextAnswer: false,
    requests: [] as string[],
  };
  const fetchImpl: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    state.requests.push(`${method} ${url}`);
    if (url.endsWith("/objects")) {
      return jsonResponse(200, {
        objects: [0, 1, 2, 3].map((i) => ({ index: i, label: `o${i}` })),
      });
    }
    if (url.endsWith("/query")) {
      if (!state.pending) {
        state.counter += 1;
        state.pending = { query_id: `q${state.counter}`, head: 0, options: [1, 2] };
      }
      return jsonResponse(200, state.pending);
    }
    if (url.endsWith("/answer")) {
      if (state.failNextAnswer) {
        state.failNextAnswer = false;
        return jsonResponse(503, { code: "unavailable", message: "boom" });
      }
      const body = JSON.parse(init?.body ?? "{}") as { query_id: string; chosen: number };
      if (!state.pending || state.pending.query_id !== body.query_id) {
        return jsonResponse(409, { code: "stale_query", message: "stale" });
      }
      if (state.answerDelay > 0) {
        await new Promise((resolve) => setTimeout(resolve, state.answerDelay));
      }
      state.pending = null;
      state.answers += 1;
      return jsonResponse(200, { answers: state.answers });
    }
    if (url.includes("/embedding")) {
      return jsonResponse(200, {
        k: 2,
        points: [0, 1, 2, 3].map((i) => ({ index: i, label: `o${i}`, coords: [i, -i] })),
      });
    }
    if (url.endsWith("/stats")) {
      return jsonResponse(200, { answers: state.answers, train_error_over_log: null });
    }
    return jsonResponse(404, { code: "not_found", message: url });
  };
  return { state, fetchImpl };
}

describe("SessionClient", () => {
  it("strips trailing slash and raises typed errors", async () => {
    const { fetchImpl, state } = fakeService();
    const client = new SessionClient("http://svc//", fetchImpl);
    await client.getStats("s");
    expect(state.requests[0]).toBe("GET http://svc/sessions/s/stats");
    const err = await client.postAnswer("s", "nope", 1).catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).code).toBe("stale_query");
    expect((err as ApiError).status).toBe(409);
  });
});

describe("SessionController", () => {
  it("answer posts then refreshes query, embedding, and stats", async () => {
    const { fetchImpl, state } = fakeService();
    const controller = await SessionController.open(
      new SessionClient("http://svc", fetchImpl),
      "s",
    );
    expect(controller.view.query?.query_id).toBe("q1");
    const view = await controller.answer(1);
    expect(state.answers).toBe(1);
    expect(view.stats?.answers).toBe(1);
    expect(view.query?.query_id).toBe("q2");
    expect(view.connection).toBe("idle");
  });

  it("a double click produces exactly one accepted answer", async () => {
    const { fetchImpl, state } = fakeService();
    state.answerDelay = 5;
    const controller = await SessionController.open(
      new SessionClient("http://svc", fetchImpl),
      "s",
    );
    await Promise.all([controller.answer(1), controller.answer(2)]);
    expect(state.answers).toBe(1);
    expect(controller.view.query?.query_id).toBe("q2");
  });

  it("recovers to the server's pending query after a failed answer", async () => {
    const { fetchImpl, state } = fakeService();
    const controller = await SessionController.open(
      new SessionClient("http://svc", fetchImpl),
      "s",
    );
    state.failNextAnswer = true;
    const failed = await controller.answer(1);
    expect(failed.connection).toBe("error");
    expect(failed.lastError).toContain("boom");
    const recovered = await controller.retry();
    expect(recovered.connection).toBe("idle");
    expect(recovered.query?.query_id).toBe("q1"); // same pending query
    expect(state.answers).toBe(0);
  });
});

describe("alignSigns", () => {
  const pts = (coords: number[][]): EmbeddingPoint[] =>
    coords.map((c, i) => ({ index: i, label: null, coords: c }));

  it("flips axes that anti-correlate with the previous frame", () => {
    const prev = pts([[1, 2], [-1, 3]]);
    const next = pts([[-1.1, 2.1], [0.9, 2.9]]); // x axis mirrored
    const aligned = alignSigns(prev, next);
    expect(aligned[0]!.coords[0]).toBeCloseTo(1.1);
    expect(aligned[1]!.coords[0]).toBeCloseTo(-0.9);
    expect(aligned[0]!.coords[1]).toBeCloseTo(2.1); // y untouched
  });

  it("is a no-op on the first frame and for aligned frames", () => {
    const next = pts([[1, 1]]);
    expect(alignSigns([], next)).toBe(next);
    const prev = pts([[1, 1], [2, 2]]);
    expect(alignSigns(prev, prev)).toBe(prev);
  });
});

describe("scripted oracle", () => {
  it("picks the closer option with ties to the lower index", () => {
    const points = [[0, 0], [1, 0], [5, 0], [-1, 0]];
    expect(oracleChoice(points, 0, [2, 1])).toBe(1);
    expect(oracleChoice(points, 0, [3, 1])).toBe(1); // tie -> lower index
  });

  it("planted clusters separate under their own geometry", () => {
    const points = twoClusterPoints(20);
    const ratio = clusterSeparation(points, (i) => (i < 10 ? 0 : 1));
    expect(ratio).toBeGreaterThan(2);
  });
});
