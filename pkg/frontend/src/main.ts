/** Wires the sketch loop: pick an episode, click points, draw the stroke,
 * submit, poll, and scrub through the generated RGB/depth frames. */

import { ApiError, Client } from "./api.js";
import { buildCaption, buildPlainCaption } from "./caption.js";
import { trajectoryToJSON } from "./geometry.js";
import { FramePlayer } from "./player.js";
import { drawSketch, SketchState } from "./sketch.js";
import { ALL_MODES, modeNeedsTrajectory, type ConditionMode, type TrajectoryJSON } from "./types.js";

const ZOOM = 6;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

async function start(): Promise<void> {
  const client = new Client("");
  const sketch = new SketchState();

  const episodeSel = el<HTMLSelectElement>("episode");
  const modeSel = el<HTMLSelectElement>("mode");
  const checkpointSel = el<HTMLSelectElement>("checkpoint");
  const depthSlider = el<HTMLInputElement>("depth");
  const depthLabel = el<HTMLElement>("depth-label");
  const stepsInput = el<HTMLInputElement>("steps");
  const seedInput = el<HTMLInputElement>("seed");
  const captionBox = el<HTMLElement>("caption");
  const statusBox = el<HTMLElement>("status");
  const errorBox = el<HTMLElement>("error");
  const sketchCanvas = el<HTMLCanvasElement>("sketch");
  const rgbCanvas = el<HTMLCanvasElement>("rgb");
  const depthCanvas = el<HTMLCanvasElement>("depthview");
  const scrub = el<HTMLInputElement>("scrub");
  const frameLabel = el<HTMLElement>("frame-label");

  for (const m of ALL_MODES) {
    const opt = document.createElement("option");
    opt.value = m;
    opt.textContent = m;
    if (m === "TRAJ_3D_FEAT") opt.selected = true;
    modeSel.appendChild(opt);
  }

  const player = new FramePlayer(
    rgbCanvas.getContext("2d")!,
    depthCanvas.getContext("2d")!,
    ZOOM,
    scrub,
    frameLabel,
  );

  const episodes = await client.listEpisodes();
  const frames = episodes.frames;
  sketchCanvas.width = episodes.width * ZOOM;
  sketchCanvas.height = episodes.height * ZOOM;
  rgbCanvas.width = depthCanvas.width = episodes.width * ZOOM;
  rgbCanvas.height = depthCanvas.height = episodes.height * ZOOM;
  for (const e of episodes.episodes) {
    const opt = document.createElement("option");
    opt.value = e.dir;
    opt.textContent = e.dir;
    episodeSel.appendChild(opt);
  }
  try {
    const cks = await client.listCheckpoints();
    for (const c of cks.checkpoints.filter((c) => c.kind === "dit")) {
      const opt = document.createElement("option");
      opt.value = c.id;
      opt.textContent = c.id;
      checkpointSel.appendChild(opt);
    }
  } catch {
    /* checkpoints are optional until training ran */
  }

  let objectName = "object";
  let background: HTMLImageElement | null = null;
  let lastTrajectory: TrajectoryJSON | null = null;

  const redraw = () => {
    const ctx = sketchCanvas.getContext("2d")!;
    ctx.imageSmoothingEnabled = false;
    ctx.fillStyle = "#111";
    ctx.fillRect(0, 0, sketchCanvas.width, sketchCanvas.height);
    if (background) ctx.drawImage(background, 0, 0, sketchCanvas.width, sketchCanvas.height);
    drawSketch(ctx, sketch, ZOOM);
    updateCaption();
  };

  const updateCaption = () => {
    const mode = modeSel.value as ConditionMode;
    if (!modeNeedsTrajectory(mode)) {
      captionBox.textContent = buildPlainCaption(objectName);
      return;
    }
    if (!sketch.complete || !sketch.robot) {
      captionBox.textContent = "(sketch incomplete: robot point, object point, stroke)";
      return;
    }
    const traj = sketch.trajectory(frames);
    const first = traj.points[0];
    const last = traj.points[traj.points.length - 1];
    captionBox.textContent = buildCaption(objectName, {
      robot: sketch.robot,
      start: [first[0], first[1]],
      end: [last[0], last[1]],
    });
  };

  const loadEpisode = async () => {
    const id = episodeSel.value;
    const meta = (await client.episodeMeta(id)) as {
      scene: { objects: { color_name: string; shape: string }[]; target_index: number };
    };
    const target = meta.scene.objects[meta.scene.target_index];
    objectName = `${target.color_name} ${target.shape}`;
    background = await new Promise<HTMLImageElement>((resolve, reject) => {
      const img = new Image();
      img.onload = () => resolve(img);
      img.onerror = reject;
      img.src = client.episodeFrameURL(id) + `?t=${Date.now()}`;
    });
    sketch.reset();
    redraw();
  };

  episodeSel.addEventListener("change", loadEpisode);
  modeSel.addEventListener("change", updateCaption);
  depthSlider.addEventListener("input", () => {
    depthLabel.textContent = Number(depthSlider.value).toFixed(2);
  });

  sketchCanvas.addEventListener("click", (ev) => {
    const rect = sketchCanvas.getBoundingClientRect();
    const x = Math.floor(((ev.clientX - rect.left) / rect.width) * episodes.width);
    const y = Math.floor(((ev.clientY - rect.top) / rect.height) * episodes.height);
    sketch.click(x, y, Number(depthSlider.value));
    redraw();
  });

  el<HTMLButtonElement>("undo").addEventListener("click", () => {
    sketch.undo();
    redraw();
  });
  el<HTMLButtonElement>("clear").addEventListener("click", () => {
    sketch.reset();
    redraw();
  });
  el<HTMLButtonElement>("edit").addEventListener("click", () => {
    // restore the previous sketch for modification
    redraw();
    statusBox.textContent = "sketch restored; adjust and submit again";
  });

  el<HTMLButtonElement>("submit").addEventListener("click", async () => {
    errorBox.textContent = "";
    const mode = modeSel.value as ConditionMode;
    const needsTraj = modeNeedsTrajectory(mode);
    if (needsTraj && !sketch.complete) {
      errorBox.textContent = "finish the sketch first (robot point, object point, stroke)";
      return;
    }
    let trajectory: TrajectoryJSON | undefined;
    if (needsTraj) {
      trajectory = sketch.trajectory(frames);
      lastTrajectory = trajectory;
      console.log("exported trajectory:", trajectoryToJSON(trajectory));
    }
    const previewCaption = captionBox.textContent ?? "";
    try {
      statusBox.textContent = "submitting...";
      const { id } = await client.submitGenerate({
        mode,
        episode_id: episodeSel.value,
        trajectory,
        checkpoint: checkpointSel.value || "final",
        steps: parseInt(stepsInput.value, 10),
        guidance_scale: 1.0,
        seed: parseInt(seedInput.value, 10),
      });
      statusBox.textContent = `job ${id} queued...`;
      const job = await client.pollJob(id, 1000);
      const meta = job.result!.meta;
      if (needsTraj && job.result!.caption !== previewCaption) {
        errorBox.textContent = "caption preview diverged from the server caption";
      }
      statusBox.textContent = `job ${id} done; loading ${meta.frames} frames`;
      player.overlay = lastTrajectory;
      await player.load(client, job.id, meta.frames, meta.depth);
      statusBox.textContent = `job ${id}: ${JSON.stringify(await client.resultMetrics(job.id))}`;
    } catch (err) {
      if (err instanceof ApiError && err.field) {
        errorBox.textContent = `${err.field}: ${err.message}`;
        highlightField(err.field);
      } else {
        errorBox.textContent = String(err);
      }
      statusBox.textContent = "failed";
    }
  });

  const highlightField = (field: string) => {
    const target =
      field.startsWith("trajectory") ? sketchCanvas :
      field === "mode" ? modeSel :
      field === "checkpoint" ? checkpointSel :
      field === "steps" ? stepsInput : null;
    if (target) {
      target.classList.add("invalid");
      setTimeout(() => target.classList.remove("invalid"), 2500);
    }
  };

  if (episodes.episodes.length) {
    episodeSel.value = episodes.episodes[0].dir;
    await loadEpisode();
  }
  depthLabel.textContent = Number(depthSlider.value).toFixed(2);
}

start().catch((err) => {
  const box = document.getElementById("error");
  if (box) box.textContent = String(err);
});
