"""Dataclass configs shared across the simulator, models, and harness."""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass

from .errors import ConfigInvalid


@dataclass(frozen=True)
class SimConfig:
    """Procedural world geometry and rendering parameters.

    World coordinates: x right, y down, z away from the camera. A point at
    world (x, y, z) projects to pixel center + focal * (x, y) / (z + z_near).
    Relative depth is the linear map of z over [z_min, z_max] to [0, 1].
    """

    height: int = 64
    width: int = 64
    frames: int = 16
    num_objects: int = 2

    # camera
    z_near: float = 0.5
    z_min: float = 1.5
    z_max: float = 2.5
    focal_per_px: float = 0.625  # focal = focal_per_px * width

    # objects: apparent half-size in pixels at the near plane
    half_size_min: float = 5.0
    half_size_max: float = 8.0

    # actuation
    grasp_radius: float = 0.35
    max_step: float = 2.0
    tol_px: float = 3.0

    # gripper geometry, world units
    finger_spread: float = 0.55
    finger_halfwidth: float = 0.075
    finger_halfheight: float = 0.25
    hover_offset: float = 1.1

    # placement bands, fractions of the image
    obj_x_band: tuple[float, float] = (0.14, 0.86)
    obj_y_band: tuple[float, float] = (0.45, 0.84)
    grip_x_band: tuple[float, float] = (0.20, 0.80)
    grip_y_band: tuple[float, float] = (0.09, 0.17)

    min_move_px: float = 12.0
    corridor_margin_px: float = 3.0
    bg_texture_amp: float = 0.05
    fps: int = 8

    def __post_init__(self):
        if not (1 <= self.num_objects <= 4):
            raise ConfigInvalid(f"num_objects must be in [1, 4], got {self.num_objects}")
        if self.height != self.width or self.height not in (64, 128):
            raise ConfigInvalid(
                f"resolution must be square 64 or 128, got {self.height}x{self.width}"
            )
        if self.frames < 8:
            raise ConfigInvalid(f"frames must be >= 8, got {self.frames}")
        if not (self.z_min < self.z_max):
            raise ConfigInvalid("z_min must be < z_max")

    @property
    def focal(self) -> float:
        return self.focal_per_px * self.width


@dataclass(frozen=True)
class CodecConfig:
    """Default lossless video codec: affine to [-1, 1] + space-to-depth."""

    spatial_factor: int = 4

    @property
    def codec_id(self) -> str:
        return f"s2d{self.spatial_factor}"

    @property
    def channels(self) -> int:
        return 3 * self.spatial_factor**2


@dataclass(frozen=True)
class DiTConfig:
    """Denoising transformer dimensions."""

    hidden_dim: int = 192
    num_blocks: int = 6
    num_heads: int = 6
    patch_t: int = 2
    patch_s: int = 2
    text_dim: int = 96
    text_heads: int = 4
    feature_channels: int = 64
    timestep_dim: int = 192
    latent_channels: int = 48
    latent_frames: int = 16
    latent_size: int = 16
    image_size: int = 64  # pixel resolution the text coordinate vocabulary covers

    def __post_init__(self):
        if self.hidden_dim % self.num_heads != 0:
            raise ConfigInvalid("hidden_dim must be divisible by num_heads")
        if self.text_dim % self.text_heads != 0:
            raise ConfigInvalid("text_dim must be divisible by text_heads")


@dataclass(frozen=True)
class PolicyConfig:
    """Two-stream policy model dimensions."""

    hidden_dim: int = 128
    num_heads: int = 4
    spatial_blocks: int = 2
    temporal_blocks: int = 2
    decoder_blocks: int = 4
    patch_t: int = 2
    patch_s: int = 2
    latent_channels: int = 48
    latent_frames: int = 16
    latent_size: int = 16
    rgb_only: bool = False

    def __post_init__(self):
        if self.hidden_dim % self.num_heads != 0:
            raise ConfigInvalid("hidden_dim must be divisible by num_heads")


@dataclass(frozen=True)
class TrainConfig:
    """Flat training hyperparameters (see docs/config.md for the file keys)."""

    lr: float = 2e-4
    batch_size: int = 4
    steps: int = 2000
    T: int = 1000
    schedule: str = "linear"
    guidance: float = 1.0
    dropout: float = 0.1
    seed: int = 0
    weight_decay: float = 1e-4
    checkpoint_every: int = 500
    sample_steps: int = 50
    threads: int = 0  # 0 = leave torch defaults; 1 = bit-reproducible mode


def config_hash(obj) -> str:
    """Short stable hash of a (dataclass or dict) config."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        obj = dataclasses.asdict(obj)
    blob = json.dumps(obj, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def dataclass_from_dict(cls, data: dict):
    """Build a dataclass from a dict, rejecting unknown keys."""
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigInvalid(f"unknown config keys for {cls.__name__}: {sorted(unknown)}")
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name in data:
            v = data[f.name]
            if isinstance(v, list):
                v = tuple(v)
            kwargs[f.name] = v
    return cls(**kwargs)
