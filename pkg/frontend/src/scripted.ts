/**
 * Scripted answerer: a stand-in human that resolves each displayed
 * query with a Euclidean distance oracle over a planted point set.  It
 * drives the same controller code path a real click would (answer →
 * refresh), which makes it useful for end-to-end exercises of the
 * service loop.
 */

import { SessionController, SessionView } from "./session.js";

export type Point = number[];

export function squaredDistance(a: Point, b: Point): number {
  let total = 0;
  for (let i = 0; i < a.length; i++) {
    const diff = (a[i] ?? 0) - (b[i] ?? 0);
    total += diff * diff;
  }
  return total;
}

/**
 * Two planted clusters in the plane: objects [0, half) around one
 * center, the rest around another, with a deterministic jitter pattern.
 */
export function twoClusterPoints(count: number, separation = 6): Point[] {
  const half = Math.floor(count / 2);
  return Array.from({ length: count }, (_, i) => {
    const center = i < half ? 0 : separation;
    // deterministic low-discrepancy jitter, no RNG needed
    const angle = (i * 2.399963229728653) % (2 * Math.PI); // golden angle
    const radius = 0.5 + 0.5 * ((i * 7919) % 97) / 97;
    return [center + radius * Math.cos(angle), radius * Math.sin(angle)];
  });
}

/** Pick whichever option is closer to the head; ties go to the lower index. */
export function oracleChoice(
  points: Point[],
  head: number,
  options: [number, number],
): number {
  const [first, second] = [...options].sort((a, b) => a - b);
  const dFirst = squaredDistance(points[head]!, points[first!]!);
  const dSecond = squaredDistance(points[head]!, points[second!]!);
  return dFirst <= dSecond ? first! : second!;
}

export async function answerWithOracle(
  controller: SessionController,
  points: Point[],
  count: number,
): Promise<SessionView> {
  let view = controller.view;
  for (let i = 0; i < count; i++) {
    const query = view.query;
    if (!query) throw new Error("controller has no pending query");
    view = await controller.answer(oracleChoice(points, query.head, query.options));
    if (view.connection === "error") {
      throw new Error(`answer ${i} failed: ${view.lastError}`);
    }
  }
  return view;
}

/** Mean inter-cluster over mean intra-cluster squared embedding distance. */
export function clusterSeparation(
  coords: Point[],
  clusterOf: (index: number) => number,
): number {
  let inter = 0;
  let interCount = 0;
  let intra = 0;
  let intraCount = 0;
  for (let i = 0; i < coords.length; i++) {
    for (let j = i + 1; j < coords.length; j++) {
      const d = squaredDistance(coords[i]!, coords[j]!);
      if (clusterOf(i) === clusterOf(j)) {
        intra += d;
        intraCount++;
      } else {
        inter += d;
        interCount++;
      }
    }
  }
  if (intraCount === 0 || interCount === 0) return NaN;
  return inter / interCount / (intra / intraCount);
}
