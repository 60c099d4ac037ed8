"""Conditioning-ladder evaluation: per-mode sampling, metrics, and the trend
verdict over the six condition modes."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..config import SimConfig, config_hash
from ..diffusion import prepare_episode, sample
from ..errors import MissingCheckpoint
from ..latentcodec import DefaultCodec
from ..trajrep import ConditionMode
from .metrics import psnr, ssim, trajectory_error
from .tracking import extract_generated_trajectory


@dataclass
class EvalReport:
    mode: str
    rows: list[dict] = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)
    config_hash: str = ""

    def aggregate(self) -> None:
        agg = {"count": len(self.rows)}
        for key in ("traj_error", "ssim", "psnr", "smoothness", "bg_stability"):
            vals = [r[key] for r in self.rows if r.get(key) is not None]
            agg[f"mean_{key}"] = float(np.mean(vals)) if vals else None
        succ = [r["success"] for r in self.rows if r.get("success") is not None]
        agg["success_rate"] = 100.0 * float(np.mean(succ)) if succ else None
        self.aggregates = agg


def _proxies(video: np.ndarray, episode) -> tuple[float, float]:
    """Informational consistency proxies (not acceptance-gating)."""
    diffs = np.abs(np.diff(video, axis=1)).mean()
    bg = episode.masks.sum(axis=0)[0] == 0  # background of the conditioning frame
    bg_dev = np.abs(video[:, 1:, bg] - video[:, :1, bg]).mean()
    return float(diffs), float(bg_dev)


def evaluate_mode(
    model,
    episodes: list,
    mode: ConditionMode,
    codec: DefaultCodec | None = None,
    sim_config: SimConfig | None = None,
    steps: int = 20,
    guidance_scale: float = 1.0,
    seed: int = 0,
    schedule=None,
    batch_size: int = 10,
    prepared: list | None = None,
) -> EvalReport:
    """Sample each held-out episode's conditions and score the results."""
    codec = codec or DefaultCodec()
    sim_config = sim_config or SimConfig()
    prepared = prepared or [prepare_episode(e, mode, codec) for e in episodes]
    report = EvalReport(mode=mode.name, config_hash=config_hash(sim_config))
    for lo in range(0, len(episodes), batch_size):
        chunk = list(zip(episodes[lo : lo + batch_size], prepared[lo : lo + batch_size]))
        outs = sample(
            model,
            [p for _, p in chunk],
            mode,
            steps=steps,
            guidance_scale=guidance_scale,
            seed=seed + lo,
            schedule=schedule,
        )
        for (ep, _), (z_rgb, z_depth) in zip(chunk, outs):
            video = codec.decode_latent(z_rgb).transpose(1, 0, 2, 3)  # N x 3 x H x W
            k = ep.scene.target_index
            start = tuple(ep.traj_gt[0][:2])
            got = extract_generated_trajectory(
                video, ep.scene.objects[k].color, start_point=start
            )
            row = {
                "seed": ep.scene.seed,
                "traj_error": trajectory_error(ep.traj_gt, got),
                "ssim": None,
                "psnr": None,
                "success": None,
            }
            if mode.multimodal and z_depth is not None:
                depth = codec.decode_depth_latent(z_depth)  # 1 x N x H x W
                ref = ep.depth.transpose(1, 0, 2, 3)
                row["ssim"] = ssim(depth[0], ref[0])
                row["psnr"] = psnr(depth, ref)
            sm, bg = _proxies(video.transpose(1, 0, 2, 3), ep)
            row["smoothness"] = sm
            row["bg_stability"] = bg
            report.rows.append(row)
    report.aggregate()
    return report


LADDER = (
    ConditionMode.TRAJ_3D_FEAT,
    ConditionMode.TRAJ_3D,
    ConditionMode.TRAJ_2D,
    ConditionMode.POINT,
)


def trend_verdict(reports: dict[str, EvalReport], min_gap: float = 0.30) -> dict:
    """Ordering over mean trajectory error: feature mode best, first-frame
    modes worst, with a minimum relative gap between the two extremes."""
    err = {name: rep.aggregates["mean_traj_error"] for name, rep in reports.items()}
    chain = [m.name for m in LADDER]
    ordered = all(err[a] <= err[b] for a, b in zip(chain, chain[1:]))
    ff_errs = [
        err[m.name]
        for m in (ConditionMode.FIRST_FRAME_RGB, ConditionMode.FIRST_FRAME_MULTIMODAL)
        if m.name in err
    ]
    below_ff = all(err[ConditionMode.POINT.name] <= e for e in ff_errs)
    ff_rgb = err.get(ConditionMode.FIRST_FRAME_RGB.name)
    gap = 1.0 - err[ConditionMode.TRAJ_3D_FEAT.name] / ff_rgb if ff_rgb else None
    return {
        "errors": err,
        "ordered": bool(ordered),
        "point_below_first_frame": bool(below_ff),
        "relative_gap_vs_first_frame_rgb": gap,
        "gap_requirement": min_gap,
        "pass": bool(ordered and below_ff and gap is not None and gap >= min_gap),
    }


def run_ablation(
    checkpoints: dict,
    episodes: list,
    model_loader,
    codec: DefaultCodec | None = None,
    sim_config: SimConfig | None = None,
    steps: int = 20,
    seed: int = 0,
    out_dir: str | Path | None = None,
) -> tuple[dict[str, EvalReport], dict]:
    """checkpoints: mode -> checkpoint path; model_loader(path, mode) -> model."""
    codec = codec or DefaultCodec()
    reports: dict[str, EvalReport] = {}
    for mode in ConditionMode:
        if mode not in checkpoints and mode.name not in checkpoints:
            raise MissingCheckpoint(f"no checkpoint for mode {mode.name}")
    for mode in ConditionMode:
        path = checkpoints.get(mode, checkpoints.get(mode.name))
        model = model_loader(path, mode)
        reports[mode.name] = evaluate_mode(
            model, episodes, mode, codec, sim_config, steps=steps, seed=seed
        )
    verdict = trend_verdict(reports)
    if out_dir is not None:
        write_reports(reports, verdict, out_dir)
    return reports, verdict


def write_reports(reports: dict[str, EvalReport], verdict: dict, out_dir: str | Path) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {
        "reports": {
            k: {"rows": r.rows, "aggregates": r.aggregates, "config_hash": r.config_hash}
            for k, r in reports.items()
        },
        "verdict": verdict,
    }
    (out_dir / "ablation.json").write_text(json.dumps(payload, indent=1))
    with open(out_dir / "ablation.csv", "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(["mode", "seed", "traj_error", "ssim", "psnr", "smoothness", "bg_stability"])
        for name, rep in reports.items():
            for row in rep.rows:
                wr.writerow(
                    [name, row["seed"], row["traj_error"], row["ssim"], row["psnr"],
                     row["smoothness"], row["bg_stability"]]
                )
    (out_dir / "table.txt").write_text(format_table(reports))


def format_table(reports: dict[str, EvalReport]) -> str:
    """Text table shaped like the conditioning-ladder results table."""
    lines = [f"{'condition':28s} {'traj err':>9s} {'ssim':>7s} {'psnr':>7s} {'smooth':>7s} {'bg dev':>7s}"]
    for name, rep in reports.items():
        a = rep.aggregates

        def fmt(v, nd=3):
            return "N/A" if v is None else f"{v:.{nd}f}"

        lines.append(
            f"{name:28s} {fmt(a['mean_traj_error'], 2):>9s} {fmt(a['mean_ssim']):>7s} "
            f"{fmt(a['mean_psnr'], 2):>7s} {fmt(a['mean_smoothness'], 4):>7s} {fmt(a['mean_bg_stability'], 4):>7s}"
        )
    return "\n".join(lines)
