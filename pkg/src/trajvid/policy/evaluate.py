"""Closed-loop policy evaluation: replay predicted joints in the simulator."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from ..config import SimConfig
from ..synthworld import evaluate_success, initial_state, step
from .model import PolicyModel


@dataclass(frozen=True)
class PolicyEvalItem:
    z_rgb: np.ndarray  # (C, n, h, w)
    z_depth: np.ndarray | None
    scene: object


def replay_joints(scene, joints: np.ndarray, config: SimConfig):
    """Feed per-frame joint commands through the simulator."""
    state = initial_state(scene, config)
    for i in range(1, joints.shape[0]):
        state = step(state, joints[i])
    return state


@torch.no_grad()
def closed_loop_eval(
    model: PolicyModel,
    items: list[PolicyEvalItem],
    config: SimConfig,
    tol_px: float | None = None,
    batch_size: int = 16,
) -> dict:
    """Success rate in [0, 100] of replaying the policy's predictions."""
    tol = tol_px if tol_px is not None else config.tol_px * (config.height / 64.0)
    model.eval()
    n_frames = config.frames
    successes: list[bool] = []
    for lo in range(0, len(items), batch_size):
        chunk = items[lo : lo + batch_size]
        z_rgb = torch.from_numpy(np.stack([it.z_rgb for it in chunk]))
        z_depth = None
        if chunk[0].z_depth is not None and not model.cfg.rgb_only:
            z_depth = torch.from_numpy(np.stack([it.z_depth for it in chunk]))
        pred = model(z_rgb, z_depth, n_frames=n_frames).numpy()
        for it, joints in zip(chunk, pred):
            final = replay_joints(it.scene, joints.astype(np.float64), config)
            successes.append(bool(evaluate_success(final, it.scene, tol)))
    rate = 100.0 * float(np.mean(successes)) if successes else 0.0
    return {"per_episode": successes, "success_rate": rate, "count": len(successes)}


def write_eval_report(report: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report, indent=1))
