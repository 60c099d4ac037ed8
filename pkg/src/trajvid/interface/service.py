"""HTTP service: submit jobs, poll them, fetch frames and metrics.

All bodies are JSON; videos are delivered as PNG frame sequences plus a
metadata document carrying frames/height/width/fps. Validation failures are
400 with the offending field path; unknown ids 404; fetching results of an
unfinished job 409; a full queue 503.
"""
from __future__ import annotations

import base64
import io
import json
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from ..config import DiTConfig, SimConfig, dataclass_from_dict
from ..diffusion import NoiseSchedule, prepare_episode, sample
from ..dit import Denoiser, load_checkpoint, restore_model
from ..evalsuite import evaluate_mode, extract_generated_trajectory, psnr, ssim, trajectory_error
from ..latentcodec import DefaultCodec
from ..synthworld import generate_dataset, load_episode, load_manifest
from ..synthworld.episodes import manifest_config
from ..trajrep import ConditionMode, ConditionSource, Trajectory, build_conditions
from ..trajrep.bundles import parse_caption
from .jobs import JobQueue, JobStore, QueueFull


class ApiError(Exception):
    def __init__(self, status: int, message: str, field: str | None = None):
        self.status = status
        self.message = message
        self.field = field
        super().__init__(message)


def _b64_png_to_frame(data: str) -> np.ndarray:
    from PIL import Image

    raw = base64.b64decode(data)
    img = Image.open(io.BytesIO(raw)).convert("RGB")
    arr = np.asarray(img, dtype=np.float32) / np.float32(255.0)
    return arr.transpose(2, 0, 1)


def _flood_mask(frame: np.ndarray, point: tuple[int, int], tolerance: float = 0.25) -> np.ndarray:
    """Connected color-key component around the clicked object point."""
    from collections import deque

    _, H, W = frame.shape
    x0, y0 = point
    color = frame[:, y0, x0][:, None, None]
    keyed = np.abs(frame - color).max(axis=0) <= tolerance
    mask = np.zeros((H, W), dtype=np.uint8)
    q = deque([(y0, x0)])
    while q:
        y, x = q.popleft()
        if not (0 <= y < H and 0 <= x < W) or mask[y, x] or not keyed[y, x]:
            continue
        mask[y, x] = 1
        q.extend([(y + 1, x), (y - 1, x), (y, x + 1), (y, x - 1)])
    return mask


class ServiceContext:
    """Shared paths plus a one-slot checkpoint cache (single model in memory)."""

    def __init__(self, runs_dir: Path, data_dir: Path | None, checkpoints_dir: Path | None):
        self.runs_dir = runs_dir
        self.data_dir = data_dir
        self.checkpoints_dir = checkpoints_dir or runs_dir
        self.codec = DefaultCodec()
        self._model_cache: tuple[str, Denoiser, dict] | None = None

    # --- data access -----------------------------------------------------------

    def episode_dir(self, episode_id: str) -> Path:
        if self.data_dir is None:
            raise ApiError(400, "service started without a dataset", field="episode_id")
        d = self.data_dir / episode_id
        if not (d / "meta.json").exists():
            raise ApiError(404, f"unknown episode {episode_id!r}")
        return d

    def sim_config(self) -> SimConfig:
        if self.data_dir is not None and (self.data_dir / "manifest.json").exists():
            return manifest_config(load_manifest(self.data_dir))
        return SimConfig()

    def checkpoint_path(self, name: str) -> Path:
        p = Path(name)
        if not p.is_absolute():
            p = self.checkpoints_dir / name
        if p.suffix != ".npz":
            p = p.with_suffix(".npz")
        if not p.exists():
            raise ApiError(400, f"unknown checkpoint {name!r}", field="checkpoint")
        return p

    def load_model(self, name: str) -> tuple[Denoiser, dict]:
        path = self.checkpoint_path(name)
        key = str(path)
        if self._model_cache and self._model_cache[0] == key:
            return self._model_cache[1], self._model_cache[2]
        state, meta = load_checkpoint(path)
        cfg = dataclass_from_dict(DiTConfig, meta["config"])
        model = Denoiser(cfg)
        restore_model(path, model, cfg, kind=meta["kind"])
        model.eval()
        self._model_cache = (key, model, meta)
        return model, meta

    def list_checkpoints(self) -> list[dict]:
        out = []
        for p in sorted(self.checkpoints_dir.rglob("*.npz")):
            try:
                _, meta = load_checkpoint(p)
            except Exception:
                continue
            out.append(
                {
                    "id": str(p.relative_to(self.checkpoints_dir)),
                    "kind": meta.get("kind"),
                    "config_hash": meta.get("config_hash"),
                    "extra": meta.get("extra", {}),
                }
            )
        return out


def validate_generate_request(body: dict, ctx: ServiceContext) -> dict:
    """Parse and bounds-check a GenerateRequest; raises ApiError(400, field)."""
    if not isinstance(body, dict):
        raise ApiError(400, "request body must be a JSON object")
    mode_name = body.get("mode")
    try:
        mode = ConditionMode[mode_name]
    except (KeyError, TypeError):
        raise ApiError(400, f"unknown mode {mode_name!r}", field="mode") from None

    episode_id = body.get("episode_id")
    frame_b64 = body.get("first_frame_png")
    if (episode_id is None) == (frame_b64 is None):
        raise ApiError(400, "provide exactly one of episode_id / first_frame_png", field="episode_id")

    steps = int(body.get("steps", 20))
    guidance = float(body.get("guidance_scale", 1.0))
    seed = int(body.get("seed", 0))
    if steps < 1:
        raise ApiError(400, "steps must be >= 1", field="steps")
    if guidance < 1.0:
        raise ApiError(400, "guidance_scale must be >= 1", field="guidance_scale")

    sim = ctx.sim_config()
    W, H, N = sim.width, sim.height, sim.frames
    traj = None
    if mode.needs_trajectory:
        raw = body.get("trajectory")
        if raw is None:
            raise ApiError(400, f"mode {mode.name} requires a trajectory", field="trajectory")
        pts = raw.get("points") if isinstance(raw, dict) else None
        if not isinstance(pts, list) or not pts:
            raise ApiError(400, "trajectory.points must be a non-empty list", field="trajectory.points")
        if len(pts) != N:
            raise ApiError(
                400, f"trajectory must have {N} points, got {len(pts)}", field="trajectory.points"
            )
        for k, p in enumerate(pts):
            ok = (
                isinstance(p, (list, tuple)) and len(p) == 3
                and 0 <= int(p[0]) < W and 0 <= int(p[1]) < H and 0.0 <= float(p[2]) <= 1.0
            )
            if not ok:
                raise ApiError(400, f"point {p!r} outside {W}x{H}x[0,1]", field=f"trajectory.points[{k}]")
        traj = Trajectory.from_json(json.dumps({"points": pts}))
    elif body.get("trajectory") is not None:
        raise ApiError(400, f"mode {mode.name} takes no trajectory", field="trajectory")

    return {
        "mode": mode.name,
        "episode_id": episode_id,
        "first_frame_png": frame_b64,
        "object_point": body.get("object_point"),
        "object_name": body.get("object_name"),
        "robot_point": body.get("robot_point"),
        "caption": body.get("caption"),
        "trajectory": json.loads(traj.to_json()) if traj else None,
        "checkpoint": body.get("checkpoint", "final"),
        "steps": steps,
        "guidance_scale": guidance,
        "seed": seed,
    }


def handle_generate(payload: dict, job_id: str, ctx: ServiceContext) -> dict:
    from PIL import Image

    mode = ConditionMode[payload["mode"]]
    sim = ctx.sim_config()
    model, meta = ctx.load_model(payload["checkpoint"])
    T = meta.get("extra", {}).get("T", 1000)
    schedule = NoiseSchedule(T=T)
    traj = Trajectory.from_json(json.dumps(payload["trajectory"])) if payload["trajectory"] else None

    episode = None
    if payload["episode_id"] is not None:
        episode = load_episode(ctx.episode_dir(payload["episode_id"]))
        k = episode.scene.target_index
        source = ConditionSource(
            first_frame=episode.rgb[0],
            object_name=payload["object_name"] or episode.scene.objects[k].name,
            robot_point=tuple(payload["robot_point"]) if payload["robot_point"] else parse_caption(episode.caption).get("robot", (0, 0)),
            trajectory=traj if traj is not None else episode.traj_gt,
            mask0=episode.masks[k, 0],
            caption_override=payload["caption"],
        )
        object_color = episode.scene.objects[k].color
    else:
        frame = _b64_png_to_frame(payload["first_frame_png"])
        if frame.shape[1] != sim.height or frame.shape[2] != sim.width:
            raise ApiError(400, f"frame must be {sim.width}x{sim.height}", field="first_frame_png")
        if payload["object_point"] is None or payload["object_name"] is None:
            raise ApiError(400, "uploads need object_point and object_name", field="object_point")
        ox, oy = (int(v) for v in payload["object_point"])
        mask0 = _flood_mask(frame, (ox, oy))
        source = ConditionSource(
            first_frame=frame,
            object_name=payload["object_name"],
            robot_point=tuple(payload["robot_point"] or (sim.width // 2, 8)),
            trajectory=traj,
            mask0=mask0,
            caption_override=payload["caption"],
        )
        object_color = tuple(float(c) for c in frame[:, oy, ox])

    bundle = build_conditions(source, mode, ctx.codec)
    N = sim.frames
    n, h, w = ctx.codec.latent_shape(N, sim.height, sim.width)
    from ..diffusion import PreparedEpisode, build_feature_volume

    prep = PreparedEpisode(
        z_ref=bundle.z0_ref.values,
        z_rgb=np.zeros((ctx.codec.channels, n, h, w), dtype=np.float32),  # shape carrier
        z_depth=np.zeros((ctx.codec.channels, n, h, w), dtype=np.float32),
        caption=bundle.caption,
        feat_patch=None,
        feat_footprint=None,
        traj=source.trajectory,
        image_size=(sim.width, sim.height),
    )
    if mode.uses_features:
        from ..trajrep.features import extract_object_features, object_bbox

        prep.feat_patch = extract_object_features(source.first_frame, source.mask0)
        _, _, bh, bw = object_bbox(source.mask0)
        prep.feat_footprint = (max(1, round(bh * h / sim.height)), max(1, round(bw * w / sim.width)))

    z_rgb, z_depth = sample(
        model, prep, mode,
        steps=payload["steps"], guidance_scale=payload["guidance_scale"],
        seed=payload["seed"], schedule=schedule,
    )

    out = ctx.runs_dir / "results" / job_id
    (out / "rgb").mkdir(parents=True, exist_ok=True)
    video = ctx.codec.decode_latent(z_rgb).transpose(1, 0, 2, 3)
    for i in range(video.shape[0]):
        arr = np.round(video[i] * 255.0).astype(np.uint8).transpose(1, 2, 0)
        Image.fromarray(arr, mode="RGB").save(out / "rgb" / f"{i:04d}.png")
    depth_video = None
    if z_depth is not None:
        (out / "depth").mkdir(exist_ok=True)
        depth_video = ctx.codec.decode_depth_latent(z_depth)
        for i in range(depth_video.shape[1]):
            d16 = np.round(depth_video[0, i] * 65535.0).astype(np.uint16)
            Image.fromarray(d16).save(out / "depth" / f"{i:04d}.png")

    metrics: dict = {}
    if source.trajectory is not None:
        got = extract_generated_trajectory(
            video, object_color, start_point=tuple(source.trajectory[0][:2])
        )
        metrics["traj_error"] = trajectory_error(source.trajectory, got)
        metrics["extracted_trajectory"] = json.loads(got.to_json())
    if episode is not None and depth_video is not None:
        ref = episode.depth.transpose(1, 0, 2, 3)
        metrics["ssim"] = ssim(depth_video[0], ref[0])
        metrics["psnr"] = psnr(depth_video, ref)
    meta_doc = {
        "frames": int(video.shape[0]),
        "height": int(video.shape[2]),
        "width": int(video.shape[3]),
        "fps": sim.fps,
        "depth": z_depth is not None,
        "mode": mode.name,
        "caption": bundle.caption,
    }
    (out / "metrics.json").write_text(json.dumps(metrics, indent=1))
    (out / "meta.json").write_text(json.dumps(meta_doc, indent=1))
    return {"result": f"/api/results/{job_id}", "meta": meta_doc, "caption": bundle.caption}


def handle_dataset(payload: dict, job_id: str, ctx: ServiceContext) -> dict:
    out = ctx.runs_dir / "datasets" / job_id
    manifest = generate_dataset(
        out, count=int(payload.get("count", 16)), seed=int(payload.get("seed", 0)),
        config=SimConfig(num_objects=int(payload.get("num_objects", 2))),
    )
    return {"dataset_dir": str(out), "count": manifest["count"], "config_hash": manifest["config_hash"]}


def handle_evaluate(payload: dict, job_id: str, ctx: ServiceContext) -> dict:
    mode = ConditionMode[payload["mode"]]
    model, meta = ctx.load_model(payload["checkpoint"])
    sim = ctx.sim_config()
    count = int(payload.get("episodes", 10))
    manifest = load_manifest(ctx.data_dir)
    episodes = [load_episode(ctx.data_dir / e["dir"]) for e in manifest["episodes"][:count]]
    schedule = NoiseSchedule(T=meta.get("extra", {}).get("T", 1000))
    report = evaluate_mode(
        model, episodes, mode, ctx.codec, sim,
        steps=int(payload.get("steps", 20)), seed=int(payload.get("seed", 0)), schedule=schedule,
    )
    out = ctx.runs_dir / "results" / job_id
    out.mkdir(parents=True, exist_ok=True)
    doc = {"rows": report.rows, "aggregates": report.aggregates, "mode": mode.name}
    (out / "metrics.json").write_text(json.dumps(doc, indent=1))
    return {"result": f"/api/results/{job_id}", "aggregates": report.aggregates}


def create_app(
    runs_dir: str | Path,
    data_dir: str | Path | None = None,
    checkpoints_dir: str | Path | None = None,
    queue_capacity: int = 16,
    worker_count: int = 1,
    frontend_dir: str | Path | None = None,
) -> FastAPI:
    runs_dir = Path(runs_dir)
    runs_dir.mkdir(parents=True, exist_ok=True)
    ctx = ServiceContext(
        runs_dir,
        Path(data_dir) if data_dir else None,
        Path(checkpoints_dir) if checkpoints_dir else None,
    )
    store = JobStore(runs_dir / "jobs.json")

    def handler(kind: str, payload: dict, job_id: str) -> dict:
        if kind == "GENERATE":
            return handle_generate(payload, job_id, ctx)
        if kind == "DATASET":
            return handle_dataset(payload, job_id, ctx)
        if kind == "EVALUATE":
            return handle_evaluate(payload, job_id, ctx)
        raise ValueError(f"job kind {kind} is not executable by this service")

    q = JobQueue(store, handler, capacity=queue_capacity, worker_count=worker_count)
    app = FastAPI(title="trajvid service")
    app.state.queue = q
    app.state.store = store
    app.state.ctx = ctx

    @app.exception_handler(ApiError)
    async def api_error_handler(request: Request, exc: ApiError):
        body = {"error": exc.message}
        if exc.field:
            body["field"] = exc.field
        return JSONResponse(status_code=exc.status, content=body)

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        err = exc.errors()[0] if exc.errors() else {}
        loc = ".".join(str(p) for p in err.get("loc", []) if p != "body")
        return JSONResponse(status_code=400, content={"error": err.get("msg", "invalid request"), "field": loc})

    @app.post("/api/jobs")
    async def submit_job(body: dict):
        kind = body.get("kind")
        if kind not in ("GENERATE", "DATASET", "EVALUATE"):
            raise ApiError(400, f"unknown or unsupported job kind {kind!r}", field="kind")
        payload = body.get("request") or {}
        if kind == "GENERATE":
            payload = validate_generate_request(payload, ctx)
        try:
            job = q.submit(kind, payload)
        except QueueFull as exc:
            raise ApiError(503, str(exc)) from None
        return {"id": job.id}

    @app.get("/api/jobs/{job_id}")
    async def get_job(job_id: str):
        job = store.get(job_id)
        if job is None:
            raise ApiError(404, f"unknown job {job_id!r}")
        return job.to_json()

    @app.get("/api/episodes")
    async def list_episodes():
        if ctx.data_dir is None:
            return {"episodes": []}
        manifest = load_manifest(ctx.data_dir)
        return {"episodes": manifest["episodes"], "frames": manifest["frames"],
                "height": manifest["height"], "width": manifest["width"], "fps": manifest["fps"]}

    @app.get("/api/episodes/{episode_id}/frame0.png")
    async def episode_frame0(episode_id: str):
        d = ctx.episode_dir(episode_id)
        return FileResponse(d / "rgb" / "0000.png", media_type="image/png")

    @app.get("/api/episodes/{episode_id}/meta")
    async def episode_meta(episode_id: str):
        d = ctx.episode_dir(episode_id)
        return json.loads((d / "meta.json").read_text())

    def _result_dir(job_id: str) -> Path:
        job = store.get(job_id)
        if job is None:
            raise ApiError(404, f"unknown job {job_id!r}")
        if job.state != "DONE":
            raise ApiError(409, f"job {job_id} is {job.state}, results not available")
        return runs_dir / "results" / job_id

    @app.get("/api/results/{job_id}/rgb/{frame}.png")
    async def result_rgb(job_id: str, frame: str):
        d = _result_dir(job_id)
        p = d / "rgb" / f"{int(frame):04d}.png"
        if not p.exists():
            raise ApiError(404, f"no rgb frame {frame}")
        return FileResponse(p, media_type="image/png")

    @app.get("/api/results/{job_id}/depth/{frame}.png")
    async def result_depth(job_id: str, frame: str):
        d = _result_dir(job_id)
        p = d / "depth" / f"{int(frame):04d}.png"
        if not p.exists():
            raise ApiError(404, f"no depth frame {frame}")
        return FileResponse(p, media_type="image/png")

    @app.get("/api/results/{job_id}/metrics")
    async def result_metrics(job_id: str):
        d = _result_dir(job_id)
        return json.loads((d / "metrics.json").read_text())

    @app.get("/api/results/{job_id}/meta")
    async def result_meta(job_id: str):
        d = _result_dir(job_id)
        return json.loads((d / "meta.json").read_text())

    @app.get("/api/checkpoints")
    async def checkpoints():
        return {"checkpoints": ctx.list_checkpoints()}

    if frontend_dir and Path(frontend_dir).exists():
        app.mount("/ui", StaticFiles(directory=str(frontend_dir), html=True), name="ui")

    return app
