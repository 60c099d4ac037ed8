/**
 * End-to-end smoke test against the real service: build a tiny dataset and a
 * random-init checkpoint, start the server, then run the full sketch ->
 * generate -> display loop over HTTP. Skips when python/the package are not
 * available (e.g. frontend-only CI).
 */
import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { Client } from "../src/api.js";
import { buildCaption } from "../src/caption.js";
import { resamplePolyline } from "../src/geometry.js";
import type { EpisodeList, TrajectoryJSON } from "../src/types.js";

const PORT = 8931;
const BASE = `http://127.0.0.1:${PORT}`;

const FIXTURE_PY = `
import sys, torch
from trajvid.config import DiTConfig, SimConfig
from trajvid.dit import Denoiser, save_checkpoint
from trajvid.synthworld import generate_dataset

root = sys.argv[1]
generate_dataset(root + "/dataset", count=2, seed=0, config=SimConfig())
torch.manual_seed(0)
model = Denoiser(DiTConfig())
save_checkpoint(root + "/ckpts/toy.npz", model, model.cfg, kind="dit", extra={"mode": "TRAJ_3D", "T": 50})
print("fixture ready")
`;

function pythonAvailable(): boolean {
  const probe = spawnSync("python3", ["-c", "import trajvid"], { timeout: 30000 });
  return probe.status === 0;
}

const HAVE_PYTHON = pythonAvailable();

describe.skipIf(!HAVE_PYTHON)("sketch -> generate -> display", () => {
  let root: string;
  let server: ChildProcess | null = null;
  const client = new Client(BASE);

  beforeAll(async () => {
    root = mkdtempSync(join(tmpdir(), "trajvid-e2e-"));
    const fixture = spawnSync("python3", ["-c", FIXTURE_PY, root], { timeout: 180000 });
    if (fixture.status !== 0) {
      throw new Error(`fixture failed: ${fixture.stderr}`);
    }
    server = spawn("python3", [
      "-m", "trajvid.interface.cli", "serve",
      "--port", String(PORT),
      "--runs-dir", join(root, "runs"),
      "--data", join(root, "dataset"),
      "--checkpoints-dir", join(root, "ckpts"),
    ]);
    // wait for the port to come up
    for (let i = 0; i < 100; i++) {
      try {
        await client.listEpisodes();
        return;
      } catch {
        await new Promise((r) => setTimeout(r, 300));
      }
    }
    throw new Error("service did not come up");
  }, 240000);

  afterAll(() => {
    server?.kill();
    if (root) rmSync(root, { recursive: true, force: true });
  });

  it("runs the full loop with byte-identical trajectory and caption", async () => {
    const episodes: EpisodeList = await client.listEpisodes();
    expect(episodes.episodes.length).toBe(2);
    const epId = episodes.episodes[0].dir;
    const meta = (await client.episodeMeta(epId)) as {
      scene: { objects: { color_name: string; shape: string }[]; target_index: number };
      traj_gt: TrajectoryJSON;
      caption: string;
    };
    const target = meta.scene.objects[meta.scene.target_index];
    const objectName = `${target.color_name} ${target.shape}`;

    // sketch a stroke from the ground-truth start to a legal end point
    const [sx, sy, sd] = meta.traj_gt.points[0];
    const traj = resamplePolyline(
      [
        { x: sx, y: sy, d: sd },
        { x: Math.min(sx + 14, episodes.width - 3), y: sy, d: sd },
      ],
      episodes.frames,
    );
    const robot = (/blue point \( (\d+) , (\d+) \)/.exec(meta.caption) || []).slice(1).map(Number) as [number, number];
    const first = traj.points[0];
    const last = traj.points[traj.points.length - 1];
    const preview = buildCaption(objectName, {
      robot,
      start: [first[0], first[1]],
      end: [last[0], last[1]],
    });

    const sentTrajBytes = JSON.stringify(traj);
    const { id } = await client.submitGenerate({
      mode: "TRAJ_3D",
      episode_id: epId,
      trajectory: traj,
      checkpoint: "toy",
      steps: 2,
      guidance_scale: 1.0,
      seed: 3,
    });
    const job = await client.pollJob(id, 500, 600);
    expect(job.state).toBe("DONE");

    // UI round-trip: the service-received payload carries the exact points
    const received = job.payload["trajectory"] as TrajectoryJSON;
    expect(JSON.stringify(received)).toBe(sentTrajBytes);

    // caption preview equals the caption the server actually used
    expect(job.result!.caption).toBe(preview);

    // frames render: every RGB and depth frame is a decodable PNG
    const rmeta = await client.resultMeta(job.id);
    expect(rmeta.frames).toBe(episodes.frames);
    for (let i = 0; i < rmeta.frames; i++) {
      for (const stream of ["rgb", "depth"] as const) {
        const res = await fetch(client.resultFrameURL(job.id, stream, i));
        expect(res.status).toBe(200);
        const buf = new Uint8Array(await res.arrayBuffer());
        expect([buf[0], buf[1], buf[2], buf[3]]).toEqual([0x89, 0x50, 0x4e, 0x47]);
      }
    }
    const metrics = (await client.resultMetrics(job.id)) as { traj_error: number };
    expect(metrics.traj_error).toBeGreaterThanOrEqual(0);
  }, 240000);

  it("surfaces 400 field paths for out-of-bounds sketches", async () => {
    const episodes = await client.listEpisodes();
    const traj = resamplePolyline(
      [
        { x: 2, y: 2, d: 0 },
        { x: 40, y: 40, d: 1 },
      ],
      episodes.frames,
    );
    traj.points[3] = [episodes.width + 5, 2, 0.5];
    try {
      await client.submitGenerate({
        mode: "TRAJ_2D",
        episode_id: episodes.episodes[0].dir,
        trajectory: traj,
        checkpoint: "toy",
        steps: 2,
        guidance_scale: 1,
        seed: 0,
      });
      expect.unreachable("submission should have failed");
    } catch (err: any) {
      expect(err.status).toBe(400);
      expect(err.field).toBe("trajectory.points[3]");
    }
  }, 60000);
});
