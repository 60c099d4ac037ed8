"""Deterministic (eta-0) DDIM-style sampling over a uniform timestep stride."""
from __future__ import annotations

import numpy as np
import torch

from ..dit.model import Denoiser
from ..latentcodec import LatentVideo
from ..trajrep import ConditionMode
from .schedule import NoiseSchedule
from .training import PreparedEpisode, build_feature_volume


def sample_timesteps(T: int, steps: int) -> np.ndarray:
    """Uniform stride of `steps` timesteps over [0, T), ascending."""
    if not (1 <= steps <= T):
        raise ValueError(f"steps={steps} outside [1, {T}]")
    return np.unique(np.round(np.linspace(0, T - 1, steps)).astype(int))


def sample_loop(
    denoise_fn,
    shape_rgb: tuple,
    shape_depth: tuple | None,
    steps: int,
    schedule: NoiseSchedule,
    seed: int,
) -> tuple[torch.Tensor, torch.Tensor | None]:
    """Core eta-0 recursion. denoise_fn(z_rgb, z_depth, t_scalar) -> (eps_rgb, eps_depth).

    Both streams share every timestep; the final update lands on the clean
    estimate (alpha_bar_prev treated as 1 at the last step).
    """
    gen = torch.Generator().manual_seed(seed)
    z_rgb = torch.randn(shape_rgb, generator=gen, dtype=torch.float32)
    z_depth = (
        torch.randn(shape_depth, generator=gen, dtype=torch.float32)
        if shape_depth is not None
        else None
    )
    taus = sample_timesteps(schedule.T, steps)
    for i in range(len(taus) - 1, -1, -1):
        t = int(taus[i])
        ab_t = schedule.alpha_bars[t]
        ab_prev = schedule.alpha_bars[int(taus[i - 1])] if i > 0 else 1.0
        eps_rgb, eps_depth = denoise_fn(z_rgb, z_depth, t)
        sq_ab = float(np.sqrt(ab_t))
        sq_1m = float(np.sqrt(1.0 - ab_t))
        sq_abp = float(np.sqrt(ab_prev))
        sq_1mp = float(np.sqrt(1.0 - ab_prev))
        x0 = (z_rgb - sq_1m * eps_rgb) / sq_ab
        z_rgb = sq_abp * x0 + sq_1mp * eps_rgb
        if z_depth is not None:
            x0d = (z_depth - sq_1m * eps_depth) / sq_ab
            z_depth = sq_abp * x0d + sq_1mp * eps_depth
    return z_rgb, z_depth


@torch.no_grad()
def sample(
    model: Denoiser,
    prepared: PreparedEpisode | list[PreparedEpisode],
    mode: ConditionMode,
    steps: int = 50,
    guidance_scale: float = 1.0,
    seed: int = 0,
    schedule: NoiseSchedule | None = None,
) -> tuple[LatentVideo, LatentVideo | None] | list:
    """Generate RGB (+DEPTH) latents under the prepared conditions.

    Accepts one prepared episode or a batch; the reference latent is held
    fixed at every step. guidance_scale 1 never evaluates the unconditional
    branch; above 1 it blends conditional and null-text predictions.
    """
    if guidance_scale < 1.0:
        raise ValueError("guidance_scale must be >= 1")
    single = isinstance(prepared, PreparedEpisode)
    items = [prepared] if single else list(prepared)
    schedule = schedule or NoiseSchedule()
    model.eval()

    B = len(items)
    z_ref = torch.from_numpy(np.stack([it.z_ref for it in items]))
    ids, valid = model.captions_to_ids([it.caption for it in items])
    y_feat = None
    if mode.uses_features:
        dims = items[0].z_rgb.shape[1:]
        y_feat = torch.from_numpy(np.stack([build_feature_volume(it, dims) for it in items]))
    C, n, h, w = items[0].z_rgb.shape
    shape_rgb = (B, C, n, h, w)
    shape_depth = shape_rgb if mode.multimodal else None
    none_null = torch.zeros(B, dtype=torch.bool)
    all_null = torch.ones(B, dtype=torch.bool)

    def denoise_fn(z_rgb, z_depth, t):
        tb = torch.full((B,), t, dtype=torch.long)
        cond = model(
            z_ref, z_rgb, z_depth, tb,
            text_ids=ids, text_valid=valid, null_text=none_null, y_feat=y_feat,
        )
        if guidance_scale == 1.0:
            return cond
        unc = model(
            z_ref, z_rgb, z_depth, tb,
            text_ids=ids, text_valid=valid, null_text=all_null, y_feat=y_feat,
        )
        out_rgb = unc[0] + guidance_scale * (cond[0] - unc[0])
        out_depth = None
        if cond[1] is not None:
            out_depth = unc[1] + guidance_scale * (cond[1] - unc[1])
        return out_rgb, out_depth

    z_rgb, z_depth = sample_loop(denoise_fn, shape_rgb, shape_depth, steps, schedule, seed)
    outs = []
    for b in range(B):
        rgb = LatentVideo(values=z_rgb[b].numpy(), stream_tag="RGB")
        dep = (
            LatentVideo(values=z_depth[b].numpy(), stream_tag="DEPTH")
            if z_depth is not None
            else None
        )
        outs.append((rgb, dep))
    return outs[0] if single else outs
