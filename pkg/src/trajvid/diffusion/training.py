"""Diffusion training: batch assembly, the masked multimodal loss, and the
seeded AdamW loop."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from ..config import TrainConfig
from ..dit.checkpoint import save_checkpoint
from ..dit.model import Denoiser
from ..errors import ModeMismatch, NanLoss
from ..latentcodec import DefaultCodec
from ..trajrep import ConditionMode, ConditionSource, build_conditions
from ..trajrep.features import extract_object_features, object_bbox, propagate_features
from .schedule import NoiseSchedule


@dataclass
class PreparedEpisode:
    """Latents plus conditioning ingredients, ready for batching."""

    z_ref: np.ndarray  # (C, 1, h, w) for the episode's mode-specific overlay
    z_rgb: np.ndarray  # (C, n, h, w)
    z_depth: np.ndarray  # (C, n, h, w)
    caption: str
    feat_patch: np.ndarray | None  # (C_f, p, p)
    feat_footprint: tuple[int, int] | None
    traj: object
    image_size: tuple[int, int]
    scene: object = None
    joints: np.ndarray | None = None


@dataclass
class TrainBatch:
    z_ref: torch.Tensor
    z_rgb: torch.Tensor
    z_depth: torch.Tensor | None
    text_ids: torch.Tensor
    text_valid: torch.Tensor
    null_text: torch.Tensor
    y_feat: torch.Tensor | None
    t: torch.Tensor
    eps: torch.Tensor  # (B, streams*C, n, h, w) noise for RGB (+DEPTH)


def prepare_episode(ep, mode: ConditionMode, codec: DefaultCodec, extractor=None) -> PreparedEpisode:
    """Encode an episode's videos and condition ingredients for `mode`."""
    H, W = ep.rgb.shape[2:]
    bundle = build_conditions(ep, mode, codec, extractor=extractor)
    z_rgb = codec.encode_video(ep.rgb.transpose(1, 0, 2, 3), stream_tag="RGB")
    z_depth = codec.encode_depth_video(ep.depth.transpose(1, 0, 2, 3))
    feat_patch = feat_footprint = None
    if mode.uses_features:
        k = ep.scene.target_index
        feat_patch = extract_object_features(ep.rgb[0], ep.masks[k, 0], extractor)
        _, _, bh, bw = object_bbox(ep.masks[k, 0])
        n, h, w = codec.latent_shape(ep.rgb.shape[0], H, W)
        feat_footprint = (max(1, round(bh * h / H)), max(1, round(bw * w / W)))
    return PreparedEpisode(
        z_ref=bundle.z0_ref.values,
        z_rgb=z_rgb.values,
        z_depth=z_depth.values,
        caption=bundle.caption,
        feat_patch=feat_patch,
        feat_footprint=feat_footprint,
        traj=ep.traj_gt,
        image_size=(W, H),
        scene=ep.scene,
        joints=ep.joints,
    )


def build_feature_volume(prep: PreparedEpisode, latent_dims) -> np.ndarray:
    vol = propagate_features(
        prep.feat_patch,
        prep.traj,
        latent_dims,
        len(prep.traj),
        image_size=prep.image_size,
        footprint=prep.feat_footprint,
    )
    return vol.values


def assemble_batch(
    prepared: list[PreparedEpisode],
    indices,
    mode: ConditionMode,
    model: Denoiser,
    schedule: NoiseSchedule,
    rng: np.random.Generator,
    torch_gen: torch.Generator,
    dropout: float,
) -> TrainBatch:
    items = [prepared[i] for i in indices]
    B = len(items)
    z_ref = torch.from_numpy(np.stack([it.z_ref for it in items]))
    z_rgb = torch.from_numpy(np.stack([it.z_rgb for it in items]))
    z_depth = None
    if mode.multimodal:
        z_depth = torch.from_numpy(np.stack([it.z_depth for it in items]))
    y_feat = None
    if mode.uses_features:
        dims = items[0].z_rgb.shape[1:]
        y_feat = torch.from_numpy(np.stack([build_feature_volume(it, dims) for it in items]))
    ids, valid = model.captions_to_ids([it.caption for it in items])
    null = torch.from_numpy(rng.random(B) < dropout)
    t = torch.from_numpy(rng.integers(0, schedule.T, size=B))
    streams = 2 if mode.multimodal else 1
    eps = torch.randn(
        (B, streams * z_rgb.shape[1], *z_rgb.shape[2:]), generator=torch_gen, dtype=torch.float32
    )
    return TrainBatch(z_ref, z_rgb, z_depth, ids, valid, null, y_feat, t, eps)


def training_loss(model: Denoiser, batch: TrainBatch, mode: ConditionMode, schedule: NoiseSchedule):
    """MSE between the injected noise and the model's prediction, over the
    RGB (+DEPTH) latents only. The reference latent is never noised and its
    output tokens are discarded inside the model."""
    if mode.multimodal and batch.z_depth is None:
        raise ModeMismatch(f"mode {mode.name} requires a depth stream in the batch")
    if not mode.multimodal and batch.z_depth is not None:
        raise ModeMismatch(f"mode {mode.name} is RGB-only but the batch has depth latents")
    C = batch.z_rgb.shape[1]
    ab = torch.from_numpy(schedule.alpha_bars[batch.t.numpy()]).to(batch.z_rgb.dtype)
    a = ab.sqrt().view(-1, 1, 1, 1, 1)
    b = (1 - ab).sqrt().view(-1, 1, 1, 1, 1)
    eps_rgb = batch.eps[:, :C]
    zt_rgb = a * batch.z_rgb + b * eps_rgb
    zt_depth = None
    if mode.multimodal:
        eps_depth = batch.eps[:, C:]
        zt_depth = a * batch.z_depth + b * eps_depth
    pred_rgb, pred_depth = model(
        batch.z_ref,
        zt_rgb,
        zt_depth,
        batch.t,
        text_ids=batch.text_ids,
        text_valid=batch.text_valid,
        null_text=batch.null_text,
        y_feat=batch.y_feat,
    )
    if mode.multimodal:
        err = torch.cat([pred_rgb - eps_rgb, pred_depth - eps_depth], dim=1)
    else:
        err = pred_rgb - eps_rgb
    return err.pow(2).mean()


def train(
    model: Denoiser,
    prepared: list[PreparedEpisode],
    mode: ConditionMode,
    hyper: TrainConfig,
    out_dir: str | Path | None = None,
    schedule: NoiseSchedule | None = None,
    log_every: int = 100,
    on_step=None,
) -> list[tuple[int, float]]:
    """Seeded AdamW loop; returns the (step, loss) curve.

    Checkpoints (when out_dir is given) carry the model config hash; the loss
    curve is also written there as loss.csv.
    """
    if not prepared:
        raise ValueError("dataset must contain at least one episode")
    if hyper.threads:
        torch.set_num_threads(hyper.threads)
    schedule = schedule or NoiseSchedule(T=hyper.T)
    rng = np.random.default_rng(np.random.SeedSequence([hyper.seed, 77]))
    gen = torch.Generator().manual_seed(hyper.seed * 9973 + 12345)
    opt = torch.optim.AdamW(model.parameters(), lr=hyper.lr, weight_decay=hyper.weight_decay)
    curve: list[tuple[int, float]] = []
    out_dir = Path(out_dir) if out_dir is not None else None
    model.train()
    for step_i in range(hyper.steps):
        idx = rng.integers(0, len(prepared), size=min(hyper.batch_size, len(prepared)))
        batch = assemble_batch(prepared, idx, mode, model, schedule, rng, gen, hyper.dropout)
        loss = training_loss(model, batch, mode, schedule)
        if not torch.isfinite(loss):
            raise NanLoss(step_i)
        opt.zero_grad(set_to_none=True)
        loss.backward()
        opt.step()
        curve.append((step_i, float(loss.detach())))
        if on_step is not None:
            on_step(step_i, curve[-1][1])
        if out_dir is not None and hyper.checkpoint_every and (step_i + 1) % hyper.checkpoint_every == 0:
            save_checkpoint(
                out_dir / f"step_{step_i + 1:06d}.npz",
                model,
                model.cfg,
                kind="dit",
                extra={"mode": mode.name, "step": step_i + 1, "T": schedule.T},
            )
    model.eval()
    if out_dir is not None:
        save_checkpoint(
            out_dir / "final.npz",
            model,
            model.cfg,
            kind="dit",
            extra={"mode": mode.name, "step": hyper.steps, "T": schedule.T},
        )
        with open(out_dir / "loss.csv", "w", newline="") as f:
            wr = csv.writer(f)
            wr.writerow(["step", "loss"])
            wr.writerows(curve)
    return curve
