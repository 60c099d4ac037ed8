/** Canvas sketch state: click the robot point, the object point, then draw
 * the trajectory stroke; each vertex captures the depth slider's value and
 * the stroke renders live in the shared depth colormap. */

import { depthColorCSS, resamplePolyline } from "./geometry.js";
import type { SketchVertex, TrajectoryJSON } from "./types.js";

export type SketchPhase = "robot" | "object" | "stroke";

export class SketchState {
  robot: [number, number] | null = null;
  object: [number, number] | null = null;
  vertices: SketchVertex[] = [];
  phase: SketchPhase = "robot";

  reset(): void {
    this.robot = null;
    this.object = null;
    this.vertices = [];
    this.phase = "robot";
  }

  /** Restore a previous sketch (Edit & Regenerate). */
  restore(robot: [number, number] | null, object: [number, number] | null, vertices: SketchVertex[]): void {
    this.robot = robot;
    this.object = object;
    this.vertices = vertices.map((v) => ({ ...v }));
    this.phase = this.robot === null ? "robot" : this.object === null ? "object" : "stroke";
  }

  /** Register a click at image coordinates with the current depth slider. */
  click(x: number, y: number, depth: number): void {
    x = Math.round(x);
    y = Math.round(y);
    if (this.phase === "robot") {
      this.robot = [x, y];
      this.phase = "object";
    } else if (this.phase === "object") {
      this.object = [x, y];
      // the stroke starts at the object: its first vertex is the click point
      this.vertices = [{ x, y, d: depth }];
      this.phase = "stroke";
    } else {
      this.vertices.push({ x, y, d: depth });
    }
  }

  undo(): void {
    if (this.phase === "stroke" && this.vertices.length > 1) {
      this.vertices.pop();
    } else if (this.phase === "stroke") {
      this.vertices = [];
      this.object = null;
      this.phase = "object";
    } else if (this.phase === "object") {
      this.robot = null;
      this.phase = "robot";
    }
  }

  get complete(): boolean {
    return this.robot !== null && this.object !== null && this.vertices.length >= 2;
  }

  trajectory(frames: number): TrajectoryJSON {
    return resamplePolyline(this.vertices, frames);
  }
}

/** Draw the sketch over the first frame at an integer zoom factor. */
export function drawSketch(
  ctx: CanvasRenderingContext2D,
  state: SketchState,
  zoom: number,
): void {
  const dot = (xy: [number, number], color: string) => {
    ctx.fillStyle = color;
    ctx.beginPath();
    ctx.arc((xy[0] + 0.5) * zoom, (xy[1] + 0.5) * zoom, 2 * zoom, 0, Math.PI * 2);
    ctx.fill();
  };
  ctx.lineWidth = Math.max(2, zoom);
  for (let i = 1; i < state.vertices.length; i++) {
    const a = state.vertices[i - 1];
    const b = state.vertices[i];
    ctx.strokeStyle = depthColorCSS(a.d);
    ctx.beginPath();
    ctx.moveTo((a.x + 0.5) * zoom, (a.y + 0.5) * zoom);
    ctx.lineTo((b.x + 0.5) * zoom, (b.y + 0.5) * zoom);
    ctx.stroke();
  }
  if (state.robot) dot(state.robot, "#0000ff");
  if (state.object) dot(state.object, "#ff0000");
  if (state.vertices.length >= 2) {
    const last = state.vertices[state.vertices.length - 1];
    dot([last.x, last.y], "#00ff00");
  }
}
