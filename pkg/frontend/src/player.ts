/** Result playback: RGB and depth side by side, one scrub bar for both, the
 * input trajectory overlaid on the RGB frames for visual error inspection. */

import type { Client } from "./api.js";
import { depthColorCSS } from "./geometry.js";
import type { TrajectoryJSON } from "./types.js";

export class FramePlayer {
  private rgbFrames: HTMLImageElement[] = [];
  private depthFrames: HTMLImageElement[] = [];
  private index = 0;
  overlay: TrajectoryJSON | null = null;

  constructor(
    private rgbCtx: CanvasRenderingContext2D,
    private depthCtx: CanvasRenderingContext2D,
    private zoom: number,
    private scrub: HTMLInputElement,
    private label: HTMLElement,
  ) {
    scrub.addEventListener("input", () => {
      this.index = parseInt(scrub.value, 10);
      this.render();
    });
  }

  get frameCount(): number {
    return this.rgbFrames.length;
  }

  get frameIndex(): number {
    return this.index;
  }

  /** Fetch every frame of a finished job (depth optional). */
  async load(client: Client, jobId: string, frames: number, hasDepth: boolean): Promise<void> {
    const fetchImage = (url: string) =>
      new Promise<HTMLImageElement>((resolve, reject) => {
        const img = new Image();
        img.onload = () => resolve(img);
        img.onerror = () => reject(new Error(`failed to load ${url}`));
        img.src = url;
      });
    const rgb: Promise<HTMLImageElement>[] = [];
    const dep: Promise<HTMLImageElement>[] = [];
    for (let i = 0; i < frames; i++) {
      rgb.push(fetchImage(client.resultFrameURL(jobId, "rgb", i)));
      if (hasDepth) dep.push(fetchImage(client.resultFrameURL(jobId, "depth", i)));
    }
    this.rgbFrames = await Promise.all(rgb);
    this.depthFrames = await Promise.all(dep);
    this.index = 0;
    this.scrub.max = String(frames - 1);
    this.scrub.value = "0";
    this.render();
  }

  /** Both canvases always show the same frame index. */
  render(): void {
    if (!this.rgbFrames.length) return;
    const z = this.zoom;
    const draw = (ctx: CanvasRenderingContext2D, img: HTMLImageElement | undefined) => {
      ctx.imageSmoothingEnabled = false;
      ctx.fillStyle = "#222";
      ctx.fillRect(0, 0, ctx.canvas.width, ctx.canvas.height);
      if (img) ctx.drawImage(img, 0, 0, img.width * z, img.height * z);
    };
    draw(this.rgbCtx, this.rgbFrames[this.index]);
    draw(this.depthCtx, this.depthFrames[this.index]);
    if (this.overlay) this.drawOverlay(this.rgbCtx);
    this.label.textContent = `frame ${this.index + 1} / ${this.rgbFrames.length}`;
  }

  private drawOverlay(ctx: CanvasRenderingContext2D): void {
    const pts = this.overlay!.points;
    const z = this.zoom;
    ctx.lineWidth = Math.max(1, z / 2);
    for (let i = 1; i < pts.length; i++) {
      ctx.strokeStyle = depthColorCSS(pts[i - 1][2]);
      ctx.beginPath();
      ctx.moveTo((pts[i - 1][0] + 0.5) * z, (pts[i - 1][1] + 0.5) * z);
      ctx.lineTo((pts[i][0] + 0.5) * z, (pts[i][1] + 0.5) * z);
      ctx.stroke();
    }
    // current commanded point, emphasized
    const p = pts[Math.min(this.index, pts.length - 1)];
    ctx.strokeStyle = "#ffffff";
    ctx.beginPath();
    ctx.arc((p[0] + 0.5) * z, (p[1] + 0.5) * z, z * 1.5, 0, Math.PI * 2);
    ctx.stroke();
  }
}
