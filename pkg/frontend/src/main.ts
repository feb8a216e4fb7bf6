/**
 * Entry point: wires the session controller to the DOM.  The base URL
 * and an optional existing session id come from query parameters, e.g.
 * `index.html?base=http://localhost:8000&session=abc123`.  Without a
 * session id a small demo session over labeled objects is created.
 */

import { SessionClient } from "./api.js";
import { renderError, renderQuery, renderScatter, renderStats } from "./render.js";
import { SessionController } from "./session.js";

const DEMO_OBJECTS = Array.from({ length: 12 }, (_, i) => `item ${i + 1}`);

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function draw(controller: SessionController): void {
  const view = controller.view;
  const highlighted = new Set<number>(
    view.query ? [view.query.head, ...view.query.options] : [],
  );
  renderQuery(el("query"), view.query, view.objects, view.connection, {
    onChoose: (option) => {
      void controller.answer(option).then(() => draw(controller));
    },
  });
  renderScatter(el<HTMLElement>("plot") as unknown as SVGSVGElement, view.embedding, highlighted);
  renderStats(el("stats"), view.stats);
  renderError(el("error"), view.lastError);
  el<HTMLButtonElement>("retry").style.display =
    view.connection === "error" ? "inline-block" : "none";
}

async function start(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const base = params.get("base") ?? "";
  const client = new SessionClient(base);
  const sessionId =
    params.get("session") ?? (await client.createSession(DEMO_OBJECTS, { policy: "pa_gnmds" }));
  const controller = await SessionController.open(client, sessionId);
  el<HTMLButtonElement>("retry").addEventListener("click", () => {
    void controller.retry().then(() => draw(controller));
  });
  draw(controller);
}

void start().catch((err) => {
  renderError(el("error"), err instanceof Error ? err.message : String(err));
});
