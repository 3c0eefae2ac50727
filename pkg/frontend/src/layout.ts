/**
 * Seeded force-directed layout.
 *
 * Positions start from a seeded PRNG and evolve under the usual spring
 * (edges attract) and charge (all pairs repel) forces with a cooling
 * schedule, then scale to the viewport. Everything is pure arithmetic on
 * the inputs, so a fixed payload always yields the same picture.
 */

export interface Point {
  x: number;
  y: number;
}

export interface LayoutEdge {
  source: string;
  target: string;
}

/** Small fast PRNG with full 32-bit state; good enough for jittering
 * initial positions and cheap to reimplement bit-exactly anywhere. */
export function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export interface LayoutOptions {
  seed?: number;
  width?: number;
  height?: number;
  padding?: number;
  iterations?: number;
}

export function computeLayout(
  ids: readonly string[],
  edges: readonly LayoutEdge[],
  options: LayoutOptions = {},
): Map<string, Point> {
  const {
    seed = 1337,
    width = 480,
    height = 320,
    padding = 28,
    iterations = 150,
  } = options;
  const result = new Map<string, Point>();
  const n = ids.length;
  if (n === 0) {
    return result;
  }
  if (n === 1) {
    result.set(ids[0]!, { x: width / 2, y: height / 2 });
    return result;
  }

  const rand = mulberry32(seed);
  const xs = new Array<number>(n);
  const ys = new Array<number>(n);
  for (let i = 0; i < n; i++) {
    xs[i] = rand() - 0.5;
    ys[i] = rand() - 0.5;
  }

  const index = new Map<string, number>();
  ids.forEach((id, i) => index.set(id, i));
  const pairs: Array<[number, number]> = [];
  for (const edge of edges) {
    const a = index.get(edge.source);
    const b = index.get(edge.target);
    if (a === undefined || b === undefined || a === b) {
      continue;
    }
    pairs.push([a, b]);
  }

  const k = Math.sqrt(1 / n);
  for (let iter = 0; iter < iterations; iter++) {
    const dx = new Array<number>(n).fill(0);
    const dy = new Array<number>(n).fill(0);
    for (let i = 0; i < n; i++) {
      for (let j = i + 1; j < n; j++) {
        const ddx = xs[i]! - xs[j]!;
        const ddy = ys[i]! - ys[j]!;
        const dist = Math.max(Math.hypot(ddx, ddy), 1e-9);
        const force = (k * k) / dist;
        dx[i]! += (ddx / dist) * force;
        dy[i]! += (ddy / dist) * force;
        dx[j]! -= (ddx / dist) * force;
        dy[j]! -= (ddy / dist) * force;
      }
    }
    for (const [a, b] of pairs) {
      const ddx = xs[a]! - xs[b]!;
      const ddy = ys[a]! - ys[b]!;
      const dist = Math.max(Math.hypot(ddx, ddy), 1e-9);
      const force = (dist * dist) / k;
      dx[a]! -= (ddx / dist) * force;
      dy[a]! -= (ddy / dist) * force;
      dx[b]! += (ddx / dist) * force;
      dy[b]! += (ddy / dist) * force;
    }
    const temperature = 0.1 * (1 - iter / iterations);
    for (let i = 0; i < n; i++) {
      const step = Math.hypot(dx[i]!, dy[i]!);
      if (step > 1e-12) {
        const clamp = Math.min(step, temperature) / step;
        xs[i]! += dx[i]! * clamp;
        ys[i]! += dy[i]! * clamp;
      }
    }
  }

  let minX = Infinity;
  let maxX = -Infinity;
  let minY = Infinity;
  let maxY = -Infinity;
  for (let i = 0; i < n; i++) {
    minX = Math.min(minX, xs[i]!);
    maxX = Math.max(maxX, xs[i]!);
    minY = Math.min(minY, ys[i]!);
    maxY = Math.max(maxY, ys[i]!);
  }
  const spanX = Math.max(maxX - minX, 1e-9);
  const spanY = Math.max(maxY - minY, 1e-9);
  ids.forEach((id, i) => {
    result.set(id, {
      x: padding + ((xs[i]! - minX) / spanX) * (width - 2 * padding),
      y: padding + ((ys[i]! - minY) / spanY) * (height - 2 * padding),
    });
  });
  return result;
}
