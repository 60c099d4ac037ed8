"""Video <-> latent codec.

The default codec is deterministic and lossless: an affine rescale of [0, 1]
to [-1, 1] followed by spatial space-to-depth with factor s, so C = 3 * s**2
latent channels. decode(encode(v)) is bit-identical for any video whose
values lie on the 2**-24 grid (everything float32 uniform sampling produces);
8-bit image data round-trips to within half an 8-bit quantization ulp.

Depth videos ride through the same transform by replicating the single
channel to three on encode and averaging back on decode.

A trained codec with real temporal compression can be substituted behind the
same interface; everything downstream only consumes latent_shape / encode /
decode and the codec_id recorded in checkpoints and sidecars.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import CodecConfig
from .errors import DimMismatch

STREAM_TAGS = ("REF", "RGB", "DEPTH")


@dataclass(frozen=True)
class LatentVideo:
    values: np.ndarray  # C x n x h x w float32
    stream_tag: str = "RGB"

    def __post_init__(self):
        if self.values.ndim != 4:
            raise DimMismatch(f"latent must be C x n x h x w, got {self.values.shape}")
        if self.stream_tag not in STREAM_TAGS:
            raise DimMismatch(f"stream_tag must be one of {STREAM_TAGS}")
        if not np.isfinite(self.values).all():
            raise DimMismatch("latent contains non-finite values")

    @property
    def shape(self):
        return self.values.shape


class DefaultCodec:
    """Lossless affine + space-to-depth codec."""

    def __init__(self, config: CodecConfig | None = None):
        self.config = config or CodecConfig()

    @property
    def codec_id(self) -> str:
        return self.config.codec_id

    @property
    def channels(self) -> int:
        return self.config.channels

    def latent_shape(self, N: int, H: int, W: int) -> tuple[int, int, int]:
        s = self.config.spatial_factor
        if H % s or W % s:
            raise DimMismatch(f"resolution {H}x{W} not divisible by spatial factor {s}")
        return N, H // s, W // s

    def encode_video(self, video: np.ndarray, stream_tag: str = "RGB") -> LatentVideo:
        """video: 3 x N x H x W in [0, 1] -> latent C x n x h x w."""
        video = np.asarray(video, dtype=np.float32)
        if video.ndim != 4 or video.shape[0] != 3:
            raise DimMismatch(f"video must be 3 x N x H x W, got {video.shape}")
        _, N, H, W = video.shape
        n, h, w = self.latent_shape(N, H, W)
        s = self.config.spatial_factor
        z = video * np.float32(2.0) - np.float32(1.0)
        z = z.reshape(3, N, h, s, w, s)
        z = z.transpose(0, 3, 5, 1, 2, 4).reshape(3 * s * s, N, h, w)
        return LatentVideo(values=np.ascontiguousarray(z), stream_tag=stream_tag)

    def decode_latent(self, z: LatentVideo) -> np.ndarray:
        """Inverse space-to-depth + affine; output clamped to [0, 1]."""
        s = self.config.spatial_factor
        C, n, h, w = z.values.shape
        if C != 3 * s * s:
            raise DimMismatch(f"latent has {C} channels, codec expects {3 * s * s}")
        v = z.values.reshape(3, s, s, n, h, w).transpose(0, 3, 4, 1, 5, 2)
        v = v.reshape(3, n, h * s, w * s)
        v = (v + np.float32(1.0)) * np.float32(0.5)
        return np.clip(v, 0.0, 1.0).astype(np.float32)

    def encode_depth_video(self, depth: np.ndarray) -> LatentVideo:
        """depth: 1 x N x H x W -> latent tagged DEPTH (channel replicated to 3)."""
        depth = np.asarray(depth, dtype=np.float32)
        if depth.ndim != 4 or depth.shape[0] != 1:
            raise DimMismatch(f"depth video must be 1 x N x H x W, got {depth.shape}")
        return self.encode_video(np.repeat(depth, 3, axis=0), stream_tag="DEPTH")

    def decode_depth_latent(self, z: LatentVideo) -> np.ndarray:
        """Inverse of encode_depth_video: decode then average the 3 channels."""
        return self.decode_latent(z).mean(axis=0, keepdims=True).astype(np.float32)


def save_latent(z: LatentVideo, path: str | Path, codec_id: str) -> None:
    """Raw little-endian float32 payload plus a JSON sidecar."""
    path = Path(path)
    path.with_suffix(".bin").write_bytes(z.values.astype("<f4").tobytes())
    C, n, h, w = z.values.shape
    sidecar = {"C": C, "n": n, "h": h, "w": w, "stream_tag": z.stream_tag, "codec_id": codec_id}
    path.with_suffix(".json").write_text(json.dumps(sidecar))


def load_latent(path: str | Path) -> tuple[LatentVideo, str]:
    path = Path(path)
    sidecar = json.loads(path.with_suffix(".json").read_text())
    shape = (sidecar["C"], sidecar["n"], sidecar["h"], sidecar["w"])
    values = np.frombuffer(path.with_suffix(".bin").read_bytes(), dtype="<f4").reshape(shape)
    return LatentVideo(values=values.copy(), stream_tag=sidecar["stream_tag"]), sidecar["codec_id"]
