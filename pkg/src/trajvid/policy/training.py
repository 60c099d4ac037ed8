"""Policy training: MSE on gripper position plus BCE on grip state."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import torch

from ..config import TrainConfig
from ..dit.checkpoint import save_checkpoint
from ..errors import NanLoss
from .model import PolicyModel


def policy_loss(model: PolicyModel, z_rgb, z_depth, joints, n_frames: int):
    pred = model(z_rgb, z_depth, n_frames=n_frames)
    pos_loss = (pred[..., :3] - joints[..., :3]).pow(2).mean()
    grip = joints[..., 3].clamp(0.0, 1.0)
    bce = torch.nn.functional.binary_cross_entropy(
        pred[..., 3].clamp(1e-6, 1 - 1e-6), grip
    )
    return pos_loss + bce, float(pos_loss.detach()), float(bce.detach())


def train_policy(
    model: PolicyModel,
    prepared: list,
    hyper: TrainConfig,
    out_dir: str | Path | None = None,
    log_every: int = 200,
    on_step=None,
) -> list[tuple[int, float]]:
    """prepared: PreparedEpisode list carrying z_rgb / z_depth / joints."""
    if not prepared:
        raise ValueError("dataset must contain at least one episode")
    for p in prepared:
        if p.joints is None:
            raise ValueError("policy training needs episodes with ground-truth joints")
    if hyper.threads:
        torch.set_num_threads(hyper.threads)
    n_frames = prepared[0].joints.shape[0]
    rng = np.random.default_rng(np.random.SeedSequence([hyper.seed, 55]))
    opt = torch.optim.AdamW(model.parameters(), lr=hyper.lr, weight_decay=hyper.weight_decay)
    curve: list[tuple[int, float]] = []
    model.train()
    for step_i in range(hyper.steps):
        idx = rng.integers(0, len(prepared), size=min(hyper.batch_size, len(prepared)))
        z_rgb = torch.from_numpy(np.stack([prepared[i].z_rgb for i in idx]))
        z_depth = torch.from_numpy(np.stack([prepared[i].z_depth for i in idx]))
        joints = torch.from_numpy(np.stack([prepared[i].joints for i in idx]))
        loss, _, _ = policy_loss(model, z_rgb, z_depth, joints, n_frames)
        if not torch.isfinite(loss):
            raise NanLoss(step_i)
        opt.zero_grad(set_to_none=True)
        loss.backward()
        opt.step()
        curve.append((step_i, float(loss.detach())))
        if on_step is not None:
            on_step(step_i, curve[-1][1])
    model.eval()
    if out_dir is not None:
        out_dir = Path(out_dir)
        save_checkpoint(
            out_dir / "policy.npz", model, model.cfg, kind="policy",
            extra={"steps": hyper.steps, "rgb_only": model.cfg.rgb_only},
        )
        with open(out_dir / "policy_loss.csv", "w", newline="") as f:
            wr = csv.writer(f)
            wr.writerow(["step", "loss"])
            wr.writerows(curve)
    return curve
