/**
 * End-to-end loop against a real service instance: a scripted answerer
 * with a two-cluster distance oracle drives 200 answers through the
 * controller (the same code path a click takes), then the session's
 * train error over its log and the 2-D embedding's cluster separation
 * are checked.
 */

import { spawn, ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { SessionClient } from "../src/api.js";
import { SessionController } from "../src/session.js";
import { answerWithOracle, clusterSeparation, twoClusterPoints } from "../src/scripted.js";

const PORT = 8712;
const BASE = `http://127.0.0.1:${PORT}`;
const N_OBJECTS = 20;
const N_ANSWERS = 200;

let service: ChildProcess;
let stateDir: string;

async function waitForService(): Promise<void> {
  for (let attempt = 0; attempt < 100; attempt++) {
    try {
      const resp = await fetch(`${BASE}/docs`);
      if (resp.status < 500) return;
    } catch {
      /* not up yet */
    }
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
  throw new Error("service did not come up");
}

beforeAll(async () => {
  stateDir = mkdtempSync(join(tmpdir(), "rckl-live-"));
  service = spawn(
    "python3",
    ["-m", "rckl.cli", "serve", "--port", String(PORT), "--state-dir", stateDir],
    { cwd: join(__dirname, "..", ".."), stdio: "ignore" },
  );
  await waitForService();
}, 60_000);

afterAll(() => {
  service?.kill();
  if (stateDir) rmSync(stateDir, { recursive: true, force: true });
});

describe("live session loop", () => {
  it(
    "200 scripted answers reach low train error and a separated embedding",
    async () => {
      const points = twoClusterPoints(N_OBJECTS);
      const client = new SessionClient(BASE);
      const sessionId = await client.createSession(
        points.map((_, i) => `obj ${i}`),
        { policy: "pa_gnmds", beta: 4 },
        17,
      );
      const controller = await SessionController.open(client, sessionId);
      const view = await answerWithOracle(controller, points, N_ANSWERS);

      expect(view.stats?.answers).toBe(N_ANSWERS);
      const trainError = view.stats?.train_error_over_log;
      expect(trainError).not.toBeNull();
      expect(trainError!).toBeLessThan(0.15);

      const coords = [...view.embedding]
        .sort((a, b) => a.index - b.index)
        .map((p) => p.coords);
      const ratio = clusterSeparation(coords, (i) => (i < N_OBJECTS / 2 ? 0 : 1));
      expect(ratio).toBeGreaterThan(2);
    },
    120_000,
  );
});
