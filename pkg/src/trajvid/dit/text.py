"""Closed-vocabulary caption tokenizer and the trainable text encoder.

Coordinates get positional tokens: inside a "( x , y )" group the first
number maps to <x..> and the second to <y..>, so the encoder can tell the
two axes apart without learning digit arithmetic.
"""
from __future__ import annotations

import math

import torch
from torch import nn

from ..errors import UnknownToken
from ..palette import OBJECT_COLORS, SHAPES

_BASE_WORDS = (
    "the", "robotic", "arm", "at", "blue", "point", "moves", "to", "red",
    "picks", "it", "up", "and", "then", "green", "(", ")", ",",
)


def build_vocabulary(width: int, height: int) -> dict[str, int]:
    words = list(_BASE_WORDS)
    for w in list(OBJECT_COLORS) + list(SHAPES):
        if w not in words:
            words.append(w)
    for x in range(width):
        words.append(f"<x{x}>")
    for y in range(height):
        words.append(f"<y{y}>")
    return {w: i for i, w in enumerate(words)}


def tokenize(caption: str, vocab: dict[str, int]) -> list[int]:
    """Whitespace tokenization with coordinate-aware number mapping."""
    ids: list[int] = []
    paren = 0  # 0 outside, 1 expect x, 2 expect y
    for raw in caption.split():
        if raw == "(":
            paren = 1
            word = raw
        elif raw == ")":
            paren = 0
            word = raw
        elif raw == "," and paren == 1:
            paren = 2
            word = raw
        elif raw.isdigit():
            if paren == 1:
                word = f"<x{int(raw)}>"
            elif paren == 2:
                word = f"<y{int(raw)}>"
            else:
                word = raw  # bare number outside a coordinate group: unknown
        else:
            word = raw
        if word not in vocab:
            raise UnknownToken(raw)
        ids.append(vocab[word])
    return ids


class _TextBlock(nn.Module):
    def __init__(self, dim: int, heads: int):
        super().__init__()
        self.norm1 = nn.LayerNorm(dim)
        self.attn = nn.MultiheadAttention(dim, heads, batch_first=True)
        self.norm2 = nn.LayerNorm(dim)
        self.mlp = nn.Sequential(nn.Linear(dim, dim * 4), nn.GELU(), nn.Linear(dim * 4, dim))

    def forward(self, x):
        h = self.norm1(x)
        a, _ = self.attn(h, h, h, need_weights=False)
        x = x + a
        return x + self.mlp(self.norm2(x))


class TextEncoder(nn.Module):
    """Embedding table + 2 bidirectional self-attention layers."""

    MAX_LEN = 64

    def __init__(self, width: int, height: int, dim: int, heads: int):
        super().__init__()
        self.vocab = build_vocabulary(width, height)
        self.embed = nn.Embedding(len(self.vocab), dim)
        self.pos = nn.Parameter(torch.zeros(self.MAX_LEN, dim))
        nn.init.normal_(self.pos, std=0.02)
        nn.init.normal_(self.embed.weight, std=0.02)
        self.blocks = nn.ModuleList([_TextBlock(dim, heads) for _ in range(2)])
        self.norm = nn.LayerNorm(dim)

    def tokenize(self, caption: str) -> list[int]:
        return tokenize(caption, self.vocab)

    def embed_ids(self, ids: torch.Tensor) -> torch.Tensor:
        """Raw table lookups plus positions, before any attention mixing."""
        return self.embed(ids) + self.pos[: ids.shape[-1]]

    def forward(self, ids: torch.Tensor) -> torch.Tensor:
        """ids: (B, L) -> (B, L, dim). L may be zero."""
        if ids.shape[-1] == 0:
            return torch.zeros(*ids.shape, self.embed.embedding_dim, device=ids.device)
        x = self.embed_ids(ids)
        for blk in self.blocks:
            x = blk(x)
        return self.norm(x)

    def encode_caption(self, caption: str) -> torch.Tensor:
        """One caption -> (L, dim) embedding sequence."""
        ids = torch.tensor([self.tokenize(caption)], dtype=torch.long)
        if ids.shape[1] > self.MAX_LEN:
            raise UnknownToken(f"caption longer than {self.MAX_LEN} tokens")
        return self.forward(ids)[0]


def sinusoidal_embedding(t: torch.Tensor, dim: int) -> torch.Tensor:
    """Standard log-spaced sin/cos features of integer timesteps."""
    half = dim // 2
    freqs = torch.exp(
        -math.log(10000.0) * torch.arange(half, dtype=torch.float64) / max(half - 1, 1)
    ).to(t.device)
    ang = t.double()[:, None] * freqs[None]
    emb = torch.cat([torch.sin(ang), torch.cos(ang)], dim=-1)
    if dim % 2:
        emb = torch.cat([emb, torch.zeros_like(emb[:, :1])], dim=-1)
    return emb
