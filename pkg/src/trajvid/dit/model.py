"""Denoising transformer over the temporally concatenated [REF | RGB | DEPTH]
token sequence, with gated feature fusion in every block.

Conventions:
  - every latent is (B, C, t, h, w); segments are patchified independently
    with one shared projection, then concatenated in the fixed segment order
    REF, RGB, DEPTH;
  - the reference segment is conditioning only: it is zero-padded in time to
    the temporal patch size, attends with everything, and its output tokens
    are discarded;
  - timestep conditioning is adaptive shift/scale/gate around each sublayer;
  - object-feature tokens are added through a gated residual fusion block at
    the end of each transformer block, replicated over RGB and DEPTH tokens.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import torch
from torch import nn

from ..config import DiTConfig
from ..errors import ConfigMismatch, DimMismatch
from .text import TextEncoder, sinusoidal_embedding

SEG_REF, SEG_RGB, SEG_DEPTH = 0, 1, 2


@dataclass
class TokenSequence:
    tokens: torch.Tensor  # (B, L, C_h)
    segment_ids: torch.Tensor  # (L,) values in {SEG_REF, SEG_RGB, SEG_DEPTH}
    grids: dict  # segment id -> (t_tokens, h_tokens, w_tokens)


def _patchify(z: torch.Tensor, p_t: int, p_s: int) -> tuple[torch.Tensor, tuple[int, int, int]]:
    """(B, C, t, h, w) -> (B, L, C*p_t*p_s*p_s) with zero temporal padding."""
    B, C, t, h, w = z.shape
    if h % p_s or w % p_s:
        raise DimMismatch(f"spatial dims {h}x{w} not divisible by patch {p_s}")
    pad = (-t) % p_t
    if pad:
        z = torch.cat([z, z.new_zeros(B, C, pad, h, w)], dim=2)
    tt, hh, ww = (t + pad) // p_t, h // p_s, w // p_s
    z = z.reshape(B, C, tt, p_t, hh, p_s, ww, p_s)
    z = z.permute(0, 2, 4, 6, 1, 3, 5, 7)  # B tt hh ww C pt py px
    return z.reshape(B, tt * hh * ww, C * p_t * p_s * p_s), (tt, hh, ww)


def _unpatchify(
    x: torch.Tensor, grid: tuple[int, int, int], C: int, p_t: int, p_s: int, t_out: int
) -> torch.Tensor:
    B = x.shape[0]
    tt, hh, ww = grid
    x = x.reshape(B, tt, hh, ww, C, p_t, p_s, p_s)
    x = x.permute(0, 4, 1, 5, 2, 6, 3, 7)
    x = x.reshape(B, C, tt * p_t, hh * p_s, ww * p_s)
    return x[:, :, :t_out]


class MultiHeadAttention(nn.Module):
    """Softmax attention on the fused kernel (math fallback covers float64)."""

    def __init__(self, dim: int, heads: int, kv_dim: int | None = None):
        super().__init__()
        self.heads = heads
        self.dim = dim
        self.q = nn.Linear(dim, dim)
        self.k = nn.Linear(kv_dim or dim, dim)
        self.v = nn.Linear(kv_dim or dim, dim)
        self.out = nn.Linear(dim, dim)

    def forward(self, x, ctx=None, ctx_valid=None):
        ctx = x if ctx is None else ctx
        B, L, _ = x.shape
        S = ctx.shape[1]
        hd = self.dim // self.heads
        q = self.q(x).reshape(B, L, self.heads, hd).transpose(1, 2)
        k = self.k(ctx).reshape(B, S, self.heads, hd).transpose(1, 2)
        v = self.v(ctx).reshape(B, S, self.heads, hd).transpose(1, 2)
        if ctx_valid is not None:
            mask = ctx_valid[:, None, None, :]
            y = nn.functional.scaled_dot_product_attention(q, k, v, attn_mask=mask)
            # items whose every context token is masked contribute nothing
            y = torch.nan_to_num(y, nan=0.0)
        else:
            y = nn.functional.scaled_dot_product_attention(q, k, v)
        y = y.transpose(1, 2).reshape(B, L, self.dim)
        return self.out(y)


class FusionBlock(nn.Module):
    """Gated residual injection: h' = h + LN(y*G) * (y*G), G = sigmoid(W_g y + b_g)."""

    def __init__(self, dim: int, gate_bias_init: float = -4.0):
        super().__init__()
        self.gate = nn.Linear(dim, dim)
        nn.init.normal_(self.gate.weight, std=0.02)
        nn.init.constant_(self.gate.bias, gate_bias_init)
        self.norm = nn.LayerNorm(dim, eps=1e-5)

    def forward(self, h: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
        if h.shape != y.shape:
            raise DimMismatch(f"fusion shapes disagree: {h.shape} vs {y.shape}")
        m = y * torch.sigmoid(self.gate(y))
        return h + self.norm(m) * m


def _modulate(x, shift, scale):
    return x * (1 + scale.unsqueeze(1)) + shift.unsqueeze(1)


class DiTBlock(nn.Module):
    def __init__(self, cfg: DiTConfig):
        super().__init__()
        d = cfg.hidden_dim
        self.norm1 = nn.LayerNorm(d, elementwise_affine=False)
        self.attn = MultiHeadAttention(d, cfg.num_heads)
        self.norm2 = nn.LayerNorm(d, elementwise_affine=False)
        self.cross = MultiHeadAttention(d, cfg.num_heads, kv_dim=cfg.text_dim)
        self.norm3 = nn.LayerNorm(d, elementwise_affine=False)
        self.mlp = nn.Sequential(nn.Linear(d, d * 4), nn.GELU(), nn.Linear(d * 4, d))
        self.modulation = nn.Linear(cfg.timestep_dim, 9 * d)
        nn.init.zeros_(self.modulation.weight)
        nn.init.zeros_(self.modulation.bias)
        self.fusion = FusionBlock(d)

    def forward(self, x, t_emb, text=None, text_valid=None, feat=None):
        mods = self.modulation(t_emb).chunk(9, dim=-1)
        (s1, c1, g1, s2, c2, g2, s3, c3, g3) = mods
        x = x + g1.unsqueeze(1) * self.attn(_modulate(self.norm1(x), s1, c1))
        if text is not None and text.shape[1] > 0:
            x = x + g2.unsqueeze(1) * self.cross(
                _modulate(self.norm2(x), s2, c2), ctx=text, ctx_valid=text_valid
            )
        x = x + g3.unsqueeze(1) * self.mlp(_modulate(self.norm3(x), s3, c3))
        if feat is not None:
            x = self.fusion(x, feat)
        return x


class Denoiser(nn.Module):
    """Full epsilon-prediction model including the text encoder."""

    def __init__(self, cfg: DiTConfig | None = None):
        super().__init__()
        self.cfg = cfg = cfg or DiTConfig()
        d = cfg.hidden_dim
        patch_in = cfg.latent_channels * cfg.patch_t * cfg.patch_s**2
        self.patch_proj = nn.Linear(patch_in, d)
        feat_in = cfg.feature_channels * cfg.patch_t * cfg.patch_s**2
        self.feat_proj = nn.Linear(feat_in, d)
        nn.init.zeros_(self.feat_proj.weight)
        nn.init.zeros_(self.feat_proj.bias)

        st = cfg.latent_size // cfg.patch_s
        t_rgb = math.ceil(cfg.latent_frames / cfg.patch_t)
        self.grid_ref = (1, st, st)
        self.grid_rgb = (t_rgb, st, st)
        self.pos_ref = nn.Parameter(torch.zeros(1 * st * st, d))
        self.pos_rgb = nn.Parameter(torch.zeros(t_rgb * st * st, d))
        self.pos_depth = nn.Parameter(torch.zeros(t_rgb * st * st, d))
        for p in (self.pos_ref, self.pos_rgb, self.pos_depth):
            nn.init.normal_(p, std=0.02)

        self.text_encoder = TextEncoder(cfg.image_size, cfg.image_size, cfg.text_dim, cfg.text_heads)
        self.null_text = nn.Parameter(torch.zeros(1, cfg.text_dim))
        self.t_mlp = nn.Sequential(
            nn.Linear(cfg.timestep_dim, cfg.timestep_dim),
            nn.SiLU(),
            nn.Linear(cfg.timestep_dim, cfg.timestep_dim),
        )
        self.blocks = nn.ModuleList([DiTBlock(cfg) for _ in range(cfg.num_blocks)])
        self.head_norm = nn.LayerNorm(d, elementwise_affine=False)
        self.head_mod = nn.Linear(cfg.timestep_dim, 2 * d)
        nn.init.zeros_(self.head_mod.weight)
        nn.init.zeros_(self.head_mod.bias)
        self.head = nn.Linear(d, patch_in)
        nn.init.zeros_(self.head.weight)
        nn.init.zeros_(self.head.bias)

    # --- token-level operations ------------------------------------------------

    def _check_latent(self, z: torch.Tensor, frames: int | None = None) -> None:
        c = self.cfg
        if z.ndim != 5 or z.shape[1] != c.latent_channels:
            raise DimMismatch(f"latent must be (B, {c.latent_channels}, t, h, w), got {tuple(z.shape)}")
        if z.shape[3] != c.latent_size or z.shape[4] != c.latent_size:
            raise DimMismatch(f"latent spatial dims {tuple(z.shape[3:])} != {c.latent_size}")
        if frames is not None and z.shape[2] != frames:
            raise DimMismatch(f"latent has {z.shape[2]} frames, expected {frames}")

    def patch_embed(
        self, z_ref: torch.Tensor, z_rgb: torch.Tensor, z_depth: torch.Tensor | None
    ) -> TokenSequence:
        cfg = self.cfg
        self._check_latent(z_ref, frames=1)
        self._check_latent(z_rgb, frames=cfg.latent_frames)
        parts, seg_ids, grids = [], [], {}
        for seg, z, pos, grid in (
            (SEG_REF, z_ref, self.pos_ref, self.grid_ref),
            (SEG_RGB, z_rgb, self.pos_rgb, self.grid_rgb),
            (SEG_DEPTH, z_depth, self.pos_depth, self.grid_rgb),
        ):
            if z is None:
                continue
            if seg == SEG_DEPTH:
                self._check_latent(z, frames=cfg.latent_frames)
            flat, got = _patchify(z, cfg.patch_t, cfg.patch_s)
            if got != grid:
                raise DimMismatch(f"segment {seg} grid {got} != configured {grid}")
            parts.append(self.patch_proj(flat) + pos)
            seg_ids.append(torch.full((flat.shape[1],), seg, dtype=torch.long))
            grids[seg] = grid
        return TokenSequence(
            tokens=torch.cat(parts, dim=1), segment_ids=torch.cat(seg_ids), grids=grids
        )

    def feature_patch_embed(self, y_feat: torch.Tensor, with_depth: bool = True) -> torch.Tensor:
        """(B, C_f, n, h, w) -> aligned (B, L, C_h): zeros on REF, replicated
        onto the RGB and DEPTH token blocks."""
        cfg = self.cfg
        if y_feat.ndim != 5 or y_feat.shape[1] != cfg.feature_channels:
            raise DimMismatch(f"feature volume must be (B, {cfg.feature_channels}, n, h, w)")
        if y_feat.shape[2] != cfg.latent_frames or y_feat.shape[3] != cfg.latent_size:
            raise DimMismatch(
                f"feature dims {tuple(y_feat.shape[2:])} do not match the RGB latent"
            )
        flat, grid = _patchify(y_feat, cfg.patch_t, cfg.patch_s)
        if grid != self.grid_rgb:
            raise DimMismatch(f"feature grid {grid} != RGB grid {self.grid_rgb}")
        tok = self.feat_proj(flat)
        n_ref = self.grid_ref[0] * self.grid_ref[1] * self.grid_ref[2]
        zeros_ref = tok.new_zeros(tok.shape[0], n_ref, tok.shape[2])
        parts = [zeros_ref, tok] + ([tok] if with_depth else [])
        return torch.cat(parts, dim=1)

    def encode_text(self, caption: str) -> torch.Tensor:
        return self.text_encoder.encode_caption(caption)

    def timestep_embedding(self, t: torch.Tensor) -> torch.Tensor:
        base = sinusoidal_embedding(t, self.cfg.timestep_dim)
        return self.t_mlp(base.to(self.patch_proj.weight.dtype))

    # --- full forward -----------------------------------------------------------

    def forward(
        self,
        z_ref: torch.Tensor,
        z_rgb: torch.Tensor,
        z_depth: torch.Tensor | None,
        t: torch.Tensor,
        text_ids: torch.Tensor | None = None,
        text_valid: torch.Tensor | None = None,
        null_text: torch.Tensor | None = None,
        y_feat: torch.Tensor | None = None,
    ):
        """Predict epsilon over the RGB (+DEPTH) latents.

        t: (B,) integer timesteps. text_ids: (B, L_text) padded token ids with
        text_valid marking real tokens. null_text: (B,) bool replacing an
        item's caption with the learned null embedding (condition dropout /
        guidance). Returns (eps_rgb, eps_depth or None).
        """
        cfg = self.cfg
        B = z_rgb.shape[0]
        if t.ndim != 1 or t.shape[0] != B:
            raise ConfigMismatch(f"t must be shape ({B},), got {tuple(t.shape)}")
        seq = self.patch_embed(z_ref, z_rgb, z_depth)
        x = seq.tokens

        text = None
        if text_ids is not None and text_ids.shape[1] > 0:
            text = self.text_encoder(text_ids)
            if text_valid is None:
                text_valid = torch.ones(B, text_ids.shape[1], dtype=torch.bool, device=x.device)
        if null_text is not None and null_text.any():
            null_seq = self.null_text.to(x.dtype)[None].expand(B, 1, -1)
            if text is None:
                text = null_seq
                text_valid = null_text[:, None]
            else:
                # replace dropped items' captions with the single null token
                text = torch.cat([text, null_seq], dim=1)
                text_valid = torch.cat(
                    [text_valid & ~null_text[:, None], null_text[:, None]], dim=1
                )

        feat = None
        if y_feat is not None:
            feat = self.feature_patch_embed(y_feat, with_depth=z_depth is not None)

        t_emb = self.timestep_embedding(t)
        for blk in self.blocks:
            x = blk(x, t_emb, text=text, text_valid=text_valid, feat=feat)

        shift, scale = self.head_mod(t_emb).chunk(2, dim=-1)
        x = self.head(_modulate(self.head_norm(x), shift, scale))

        n_ref = self.grid_ref[0] * self.grid_ref[1] * self.grid_ref[2]
        n_rgb = self.grid_rgb[0] * self.grid_rgb[1] * self.grid_rgb[2]
        rgb_tok = x[:, n_ref : n_ref + n_rgb]
        eps_rgb = _unpatchify(
            rgb_tok, self.grid_rgb, cfg.latent_channels, cfg.patch_t, cfg.patch_s, cfg.latent_frames
        )
        eps_depth = None
        if z_depth is not None:
            depth_tok = x[:, n_ref + n_rgb :]
            eps_depth = _unpatchify(
                depth_tok, self.grid_rgb, cfg.latent_channels, cfg.patch_t, cfg.patch_s, cfg.latent_frames
            )
        return eps_rgb, eps_depth

    # --- caption plumbing ---------------------------------------------------------

    def captions_to_ids(self, captions: list[str], device=None) -> tuple[torch.Tensor, torch.Tensor]:
        """Tokenize and pad a batch of captions -> (ids, valid)."""
        seqs = [self.text_encoder.tokenize(c) for c in captions]
        L = max((len(s) for s in seqs), default=0)
        ids = torch.zeros(len(seqs), L, dtype=torch.long, device=device)
        valid = torch.zeros(len(seqs), L, dtype=torch.bool, device=device)
        for i, s in enumerate(seqs):
            ids[i, : len(s)] = torch.tensor(s, dtype=torch.long)
            valid[i, : len(s)] = True
        return ids, valid
