/**
 * DOM rendering: query panel, SVG scatter of the 2-D embedding, and a
 * stats table.  Scatter points are keyed by object index so identity is
 * stable across updates while the axes rescale to fit the data.
 */

import { EmbeddingPoint, ObjectDto, QueryDto, StatsDto } from "./api.js";
import { ConnectionState } from "./session.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const PLOT_SIZE = 420;
const MARGIN = 24;

export interface QueryPanelHooks {
  onChoose(option: number): void;
}

function objectCard(doc: Document, obj: ObjectDto | undefined, index: number): HTMLElement {
  const card = doc.createElement("div");
  card.className = "object-card";
  if (obj?.image) {
    const img = doc.createElement("img");
    img.src = obj.image;
    img.alt = obj.label ?? `object ${index}`;
    card.appendChild(img);
  }
  const caption = doc.createElement("span");
  caption.textContent = obj?.label ?? `object ${index}`;
  card.appendChild(caption);
  return card;
}

export function renderQuery(
  container: HTMLElement,
  query: QueryDto | null,
  objects: ObjectDto[],
  connection: ConnectionState,
  hooks: QueryPanelHooks,
): void {
  const doc = container.ownerDocument;
  container.textContent = "";
  if (!query) {
    container.appendChild(doc.createTextNode("Waiting for a query…"));
    return;
  }
  const prompt = doc.createElement("p");
  prompt.className = "prompt";
  const head = objects[query.head];
  prompt.textContent = `Which is more similar to ${head?.label ?? `object ${query.head}`}?`;
  container.appendChild(prompt);
  container.appendChild(objectCard(doc, head, query.head));

  const row = doc.createElement("div");
  row.className = "options";
  for (const option of query.options) {
    const button = doc.createElement("button");
    button.className = "option";
    button.dataset.option = String(option);
    button.disabled = connection === "busy";
    button.appendChild(objectCard(doc, objects[option], option));
    button.addEventListener("click", () => hooks.onChoose(option));
    row.appendChild(button);
  }
  container.appendChild(row);
}

interface Extent {
  lo: number;
  hi: number;
}

function extent(values: number[]): Extent {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (!isFinite(lo) || lo === hi) return { lo: lo - 1, hi: lo + 1 };
  return { lo, hi };
}

function scale(e: Extent, size: number): (v: number) => number {
  const span = e.hi - e.lo;
  return (v) => MARGIN + ((v - e.lo) / span) * (size - 2 * MARGIN);
}

export function renderScatter(
  svg: SVGSVGElement,
  points: EmbeddingPoint[],
  highlighted: Set<number> = new Set(),
): void {
  const doc = svg.ownerDocument;
  svg.setAttribute("viewBox", `0 0 ${PLOT_SIZE} ${PLOT_SIZE}`);
  const sx = scale(extent(points.map((p) => p.coords[0] ?? 0)), PLOT_SIZE);
  const sy = scale(extent(points.map((p) => p.coords[1] ?? 0)), PLOT_SIZE);

  const seen = new Set<string>();
  for (const p of points) {
    const key = `pt-${p.index}`;
    seen.add(key);
    let circle = svg.querySelector<SVGCircleElement>(`#${key}`);
    if (!circle) {
      circle = doc.createElementNS(SVG_NS, "circle");
      circle.id = key;
      circle.setAttribute("r", "5");
      const title = doc.createElementNS(SVG_NS, "title");
      circle.appendChild(title);
      svg.appendChild(circle);
    }
    circle.setAttribute("cx", sx(p.coords[0] ?? 0).toFixed(2));
    // SVG y grows downward; flip so larger coordinates render higher
    circle.setAttribute("cy", (PLOT_SIZE - sy(p.coords[1] ?? 0)).toFixed(2));
    circle.setAttribute("class", highlighted.has(p.index) ? "pt pt-active" : "pt");
    const title = circle.querySelector("title");
    if (title) title.textContent = p.label ?? `object ${p.index}`;
  }
  for (const circle of Array.from(svg.querySelectorAll("circle"))) {
    if (!seen.has(circle.id)) circle.remove();
  }
}

const STAT_ROWS: [keyof StatsDto, string][] = [
  ["answers", "Answers"],
  ["train_error_over_log", "Train error (log)"],
  ["updates", "Active updates"],
  ["passive", "Passive steps"],
  ["eig_computations", "Eigen computations"],
  ["projections_applied", "Projections applied"],
  ["skips", "Projections skipped"],
  ["eig_lower_bound", "Eigenvalue lower bound"],
];

export function renderStats(container: HTMLElement, stats: StatsDto | null): void {
  const doc = container.ownerDocument;
  container.textContent = "";
  if (!stats) return;
  const table = doc.createElement("table");
  for (const [key, label] of STAT_ROWS) {
    const row = doc.createElement("tr");
    const name = doc.createElement("td");
    name.textContent = label;
    const value = doc.createElement("td");
    const raw = stats[key];
    value.textContent =
      raw === null ? "—" : typeof raw === "number" && !Number.isInteger(raw)
        ? raw.toFixed(4)
        : String(raw);
    row.append(name, value);
    table.appendChild(row);
  }
  container.appendChild(table);
}

export function renderError(container: HTMLElement, message: string | null): void {
  container.textContent = message ?? "";
  container.style.display = message ? "block" : "none";
}
