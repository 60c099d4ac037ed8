import { describe, expect, it } from "vitest";

import { depthColor, resamplePolyline, TooFewVertices, trajectoryToJSON } from "../src/geometry.js";
import type { SketchVertex } from "../src/types.js";

describe("resamplePolyline", () => {
  it("resamples a straight 2-vertex stroke to equally spaced collinear points", () => {
    const verts: SketchVertex[] = [
      { x: 0, y: 0, d: 0.5 },
      { x: 30, y: 0, d: 0.5 },
    ];
    const traj = resamplePolyline(verts, 16);
    expect(traj.points).toHaveLength(16);
    const xs = traj.points.map((p) => p[0]);
    for (let i = 0; i < 16; i++) {
      expect(traj.points[i][1]).toBe(0); // collinear
      expect(Math.abs(xs[i] - (30 * i) / 15)).toBeLessThanOrEqual(0.5); // uniform + rounding
    }
    expect(xs[0]).toBe(0);
    expect(xs[15]).toBe(30);
  });

  it("interpolates depth monotonically along the arc", () => {
    const verts: SketchVertex[] = [
      { x: 0, y: 0, d: 0 },
      { x: 10, y: 10, d: 0.4 },
      { x: 20, y: 0, d: 1 },
    ];
    const traj = resamplePolyline(verts, 12);
    const ds = traj.points.map((p) => p[2]);
    for (let i = 1; i < ds.length; i++) expect(ds[i]).toBeGreaterThanOrEqual(ds[i - 1]);
    expect(ds[0]).toBe(0);
    expect(ds[ds.length - 1]).toBe(1);
  });

  it("spaces points uniformly by arc length across segments", () => {
    const verts: SketchVertex[] = [
      { x: 0, y: 0, d: 0 },
      { x: 10, y: 0, d: 0.5 },
      { x: 10, y: 10, d: 1 },
    ];
    const traj = resamplePolyline(verts, 21);
    // total arc 20 -> spacing 1; corner at arc length 10 = point 10
    expect(traj.points[10]).toEqual([10, 0, 0.5]);
    for (let i = 1; i < 21; i++) {
      const [x1, y1] = traj.points[i - 1];
      const [x2, y2] = traj.points[i];
      expect(Math.hypot(x2 - x1, y2 - y1)).toBeCloseTo(1, 5);
    }
  });

  it("rejects single-vertex strokes", () => {
    expect(() => resamplePolyline([{ x: 1, y: 1, d: 0 }], 8)).toThrow(TooFewVertices);
  });

  it("handles zero-length strokes as a constant trajectory", () => {
    const traj = resamplePolyline(
      [
        { x: 5, y: 6, d: 0.3 },
        { x: 5, y: 6, d: 0.3 },
      ],
      4,
    );
    for (const p of traj.points) expect(p).toEqual([5, 6, 0.3]);
  });
});

describe("depthColor", () => {
  it("maps near to blue and far to red", () => {
    expect(depthColor(0)).toEqual([0, 0, 1]);
    expect(depthColor(1)).toEqual([1, 0, 0]);
    expect(depthColor(0.25)).toEqual([0.25, 0, 0.75]);
  });
});

describe("trajectoryToJSON", () => {
  it("serializes integers for pixels and decimals for depth", () => {
    const s = trajectoryToJSON({ points: [[1, 2, 0.5], [3, 4, 1]] });
    expect(s).toBe('{"points":[[1,2,0.5],[3,4,1]]}');
  });
});
