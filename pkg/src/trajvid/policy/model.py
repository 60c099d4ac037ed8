"""Two-stream latent policy: spatial then temporal attention per stream,
cross-attention exchange, and a residual 1-D conv decoder to joint values."""
from __future__ import annotations

import math

import torch
from torch import nn

from ..config import PolicyConfig
from ..dit.model import MultiHeadAttention, _patchify
from ..errors import DimMismatch


class _SelfBlock(nn.Module):
    def __init__(self, dim: int, heads: int):
        super().__init__()
        self.norm1 = nn.LayerNorm(dim)
        self.attn = MultiHeadAttention(dim, heads)
        self.norm2 = nn.LayerNorm(dim)
        self.mlp = nn.Sequential(nn.Linear(dim, dim * 4), nn.GELU(), nn.Linear(dim * 4, dim))

    def forward(self, x):
        x = x + self.attn(self.norm1(x))
        return x + self.mlp(self.norm2(x))


class _Stream(nn.Module):
    """Patch embedding plus factorized spatial/temporal attention."""

    def __init__(self, cfg: PolicyConfig):
        super().__init__()
        d = cfg.hidden_dim
        patch_in = cfg.latent_channels * cfg.patch_t * cfg.patch_s**2
        self.cfg = cfg
        self.proj = nn.Linear(patch_in, d)
        st = cfg.latent_size // cfg.patch_s
        tt = math.ceil(cfg.latent_frames / cfg.patch_t)
        self.tt, self.st = tt, st
        self.pos = nn.Parameter(torch.zeros(tt * st * st, d))
        nn.init.normal_(self.pos, std=0.02)
        self.spatial = nn.ModuleList([_SelfBlock(d, cfg.num_heads) for _ in range(cfg.spatial_blocks)])
        self.temporal = nn.ModuleList([_SelfBlock(d, cfg.num_heads) for _ in range(cfg.temporal_blocks)])

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        cfg = self.cfg
        flat, grid = _patchify(z, cfg.patch_t, cfg.patch_s)
        if grid != (self.tt, self.st, self.st):
            raise DimMismatch(f"latent grid {grid} != configured {(self.tt, self.st, self.st)}")
        x = self.proj(flat) + self.pos
        B, L, d = x.shape
        S = self.st * self.st
        for blk in self.spatial:  # attention within each latent frame
            x = blk(x.reshape(B * self.tt, S, d)).reshape(B, L, d)
        x = x.reshape(B, self.tt, S, d).transpose(1, 2).reshape(B * S, self.tt, d)
        for blk in self.temporal:  # attention within each spatial site
            x = blk(x)
        x = x.reshape(B, S, self.tt, d).transpose(1, 2).reshape(B, L, d)
        return x


class _ResConv1dBlock(nn.Module):
    def __init__(self, dim: int):
        super().__init__()
        self.conv1 = nn.Conv1d(dim, dim, kernel_size=3, padding=1)
        self.conv2 = nn.Conv1d(dim, dim, kernel_size=3, padding=1)
        self.act = nn.GELU()

    def forward(self, x):
        return x + self.conv2(self.act(self.conv1(x)))


class PolicyModel(nn.Module):
    """Regresses (gx, gy, gz, grip) per frame from RGB+depth latents.

    With cfg.rgb_only the depth input is ignored and replaced by a learned
    constant latent, ablating the depth pathway without changing shapes.
    """

    def __init__(self, cfg: PolicyConfig | None = None):
        super().__init__()
        self.cfg = cfg = cfg or PolicyConfig()
        d = cfg.hidden_dim
        self.rgb_stream = _Stream(cfg)
        self.depth_stream = _Stream(cfg)
        self.exchange_rgb = MultiHeadAttention(d, cfg.num_heads)
        self.exchange_depth = MultiHeadAttention(d, cfg.num_heads)
        self.norm_rgb = nn.LayerNorm(d)
        self.norm_depth = nn.LayerNorm(d)
        self.decoder = nn.Sequential(*[_ResConv1dBlock(d) for _ in range(cfg.decoder_blocks)])
        self.head = nn.Linear(d, 4)
        self.depth_const = nn.Parameter(torch.zeros(cfg.latent_channels, 1, 1, 1))

    def forward(self, z_rgb: torch.Tensor, z_depth: torch.Tensor | None, n_frames: int | None = None):
        """(B, C, n, h, w) latents -> (B, N, 4) with grip through a sigmoid."""
        cfg = self.cfg
        if z_rgb.ndim != 5 or z_rgb.shape[1] != cfg.latent_channels:
            raise DimMismatch(f"rgb latent must be (B, {cfg.latent_channels}, n, h, w)")
        if cfg.rgb_only or z_depth is None:
            z_depth = self.depth_const.to(z_rgb.dtype).expand_as(z_rgb)
        elif z_depth.shape != z_rgb.shape:
            raise DimMismatch(f"stream dims disagree: {z_rgb.shape} vs {z_depth.shape}")
        n_frames = n_frames or cfg.latent_frames

        r = self.rgb_stream(z_rgb)
        p = self.depth_stream(z_depth)
        r = r + self.exchange_rgb(self.norm_rgb(r), ctx=p)
        p = p + self.exchange_depth(self.norm_depth(p), ctx=r)
        h = r + p

        B, L, d = h.shape
        tt = self.rgb_stream.tt
        S = L // tt
        pooled = h.reshape(B, tt, S, d).mean(dim=2)  # per time-token features
        dec = self.decoder(pooled.transpose(1, 2)).transpose(1, 2)
        joints_t = self.head(dec)  # (B, tt, 4)
        joints = _interp_time(joints_t, n_frames)
        pos, grip = joints[..., :3], torch.sigmoid(joints[..., 3:])
        return torch.cat([pos, grip], dim=-1)


def _interp_time(x: torch.Tensor, n: int) -> torch.Tensor:
    """Endpoint-aligned linear upsampling along dim 1: (B, t, C) -> (B, n, C)."""
    B, t, C = x.shape
    if t == n:
        return x
    if t == 1:
        return x.expand(B, n, C)
    src = torch.linspace(0, t - 1, n, dtype=x.dtype, device=x.device)
    i0 = src.floor().long().clamp(0, t - 2)
    w = (src - i0).unsqueeze(0).unsqueeze(-1)
    return x[:, i0] * (1 - w) + x[:, i0 + 1] * w
