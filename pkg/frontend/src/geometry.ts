/** Stroke geometry: arc-length-uniform resampling and the depth colormap. */

import type { SketchVertex, TrajectoryJSON, TrajPoint } from "./types.js";

export class TooFewVertices extends Error {
  constructor() {
    super("a trajectory stroke needs at least 2 vertices");
  }
}

/**
 * Resample a freehand stroke to exactly n per-frame points, uniformly spaced
 * along arc length, with depth linearly interpolated along the same arc.
 * Pixel coordinates are rounded to integers (the wire format carries integer
 * pixels); depths stay fractional.
 */
export function resamplePolyline(vertices: SketchVertex[], n: number): TrajectoryJSON {
  if (vertices.length < 2) throw new TooFewVertices();
  if (n < 2) throw new RangeError(`need at least 2 output points, got ${n}`);

  const cum: number[] = [0];
  for (let i = 1; i < vertices.length; i++) {
    const dx = vertices[i].x - vertices[i - 1].x;
    const dy = vertices[i].y - vertices[i - 1].y;
    cum.push(cum[i - 1] + Math.hypot(dx, dy));
  }
  const total = cum[cum.length - 1];

  const points: TrajPoint[] = [];
  for (let k = 0; k < n; k++) {
    const target = total === 0 ? 0 : (total * k) / (n - 1);
    // locate the segment containing the target arc length
    let i = 1;
    while (i < cum.length - 1 && cum[i] < target) i++;
    const a = vertices[i - 1];
    const b = vertices[i];
    const seg = cum[i] - cum[i - 1];
    const t = seg === 0 ? 0 : (target - cum[i - 1]) / seg;
    const x = a.x + (b.x - a.x) * t;
    const y = a.y + (b.y - a.y) * t;
    const d = a.d + (b.d - a.d) * t;
    points.push([Math.round(x), Math.round(y), clamp01(d)]);
  }
  return { points };
}

export function clamp01(v: number): number {
  return Math.min(1, Math.max(0, v));
}

/** Depth colormap shared with the server overlay: near = blue, far = red. */
export function depthColor(d: number): [number, number, number] {
  const v = clamp01(d);
  return [v, 0, 1 - v];
}

export function depthColorCSS(d: number): string {
  const [r, g, b] = depthColor(d);
  return `rgb(${Math.round(r * 255)}, ${Math.round(g * 255)}, ${Math.round(b * 255)})`;
}

/** Serialize exactly as the service stores and echoes it. */
export function trajectoryToJSON(traj: TrajectoryJSON): string {
  return JSON.stringify(traj);
}
