"""Scene sampling: objects, colors, placements, and the pick destination.

Everything is drawn from a single seeded PCG64 stream so that a given
(seed, config) pair always yields a bit-identical scene.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..config import SimConfig
from ..errors import ConfigInvalid
from ..palette import (
    BACKGROUND_BASES,
    GRIPPER_COLOR,
    OBJECT_COLORS,
    OBJECT_VOCABULARY,
    SHAPES,
)


@dataclass(frozen=True)
class ObjectSpec:
    shape: str  # square | disc | triangle
    color: tuple[float, float, float]
    color_name: str
    half_size: float  # apparent half-size in pixels at the near plane
    position: tuple[float, float, float]  # world units

    @property
    def name(self) -> str:
        return f"{self.color_name} {self.shape}"


@dataclass(frozen=True)
class SceneSpec:
    seed: int
    background_id: int
    objects: tuple[ObjectSpec, ...]
    gripper_start: tuple[float, float, float]
    target_index: int
    destination: tuple[float, float, float]


def project(pos, config: SimConfig) -> tuple[float, float]:
    """World point -> float pixel coordinates (x, y)."""
    x, y, z = pos
    s = config.focal / (z + config.z_near)
    cx = (config.width - 1) / 2.0
    cy = (config.height - 1) / 2.0
    return cx + s * x, cy + s * y


def backproject(px: float, py: float, z: float, config: SimConfig) -> tuple[float, float, float]:
    """Pixel coordinates + world z -> world point."""
    s = config.focal / (z + config.z_near)
    cx = (config.width - 1) / 2.0
    cy = (config.height - 1) / 2.0
    return (px - cx) / s, (py - cy) / s, z


def apparent_half_size(half_size: float, z: float, config: SimConfig) -> float:
    """On-screen half-size in pixels of an object at depth z."""
    return half_size * (config.z_min + config.z_near) / (z + config.z_near)


def relative_depth(z: float, config: SimConfig) -> float:
    return float(np.clip((z - config.z_min) / (config.z_max - config.z_min), 0.0, 1.0))


def background_image(scene_seed: int, background_id: int, config: SimConfig) -> np.ndarray:
    """Low-contrast textured background, 3 x H x W float32.

    Texture is a smooth random field so that flat-color conditioning markers
    have to be genuinely detected rather than trivially thresholded.
    """
    rng = np.random.default_rng(np.random.SeedSequence([scene_seed, background_id, 7]))
    base = np.array(BACKGROUND_BASES[background_id], dtype=np.float32)
    coarse = rng.random((3, 9, 9), dtype=np.float32) * 2.0 - 1.0
    img = _bilinear_upsample(coarse, config.height, config.width)
    img = base[:, None, None] + config.bg_texture_amp * img
    return np.clip(img, 0.0, 1.0).astype(np.float32)


def _bilinear_upsample(img: np.ndarray, h: int, w: int) -> np.ndarray:
    c, ih, iw = img.shape
    ys = np.linspace(0, ih - 1, h, dtype=np.float64)
    xs = np.linspace(0, iw - 1, w, dtype=np.float64)
    y0 = np.floor(ys).astype(int).clip(0, ih - 2)
    x0 = np.floor(xs).astype(int).clip(0, iw - 2)
    wy = (ys - y0)[None, :, None]
    wx = (xs - x0)[None, None, :]
    a = img[:, y0][:, :, x0]
    b = img[:, y0][:, :, x0 + 1]
    cc = img[:, y0 + 1][:, :, x0]
    d = img[:, y0 + 1][:, :, x0 + 1]
    out = a * (1 - wy) * (1 - wx) + b * (1 - wy) * wx + cc * wy * (1 - wx) + d * wy * wx
    return out.astype(np.float32)


def _point_segment_distance(p, a, b) -> float:
    p, a, b = (np.asarray(v, dtype=np.float64) for v in (p, a, b))
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return float(np.hypot(*(p - a)))
    t = float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
    return float(np.hypot(*(p - a - t * ab)))


def make_scene(seed: int, config: SimConfig | None = None) -> SceneSpec:
    """Sample a valid scene. Deterministic for a fixed (seed, config)."""
    config = config or SimConfig()
    if not (1 <= config.num_objects <= 4):
        raise ConfigInvalid(f"num_objects out of range: {config.num_objects}")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 11]))
    W, H = config.width, config.height

    background_id = int(rng.integers(len(BACKGROUND_BASES)))
    color_names = list(OBJECT_COLORS)
    rng.shuffle(color_names)
    color_names = color_names[: config.num_objects]
    shapes = [SHAPES[int(rng.integers(len(SHAPES)))] for _ in range(config.num_objects)]
    half_sizes = [
        float(rng.uniform(config.half_size_min, config.half_size_max))
        for _ in range(config.num_objects)
    ]
    target_index = int(rng.integers(config.num_objects))

    def sample_point(x_band, y_band, margin_px: float):
        px = rng.uniform(max(x_band[0] * W, margin_px), min(x_band[1] * W, W - 1 - margin_px))
        py = rng.uniform(max(y_band[0] * H, margin_px), min(y_band[1] * H, H - 1 - margin_px))
        z = rng.uniform(config.z_min + 0.05, config.z_max - 0.05)
        return float(px), float(py), float(z)

    # layout: the transport corridor is sampled first and all distractors
    # must keep clear of it; if a corridor leaves no room, resample the whole
    # layout (everything stays on the one seeded stream, so still deterministic).
    # Distractors may sit above the manipulation band: the gripper passing over
    # a distractor only costs that distractor mask pixels, which is harmless.
    scale = W / 64.0
    distractor_y_band = (0.30, 0.88)
    positions: list[tuple[float, float, float] | None] = [None] * config.num_objects
    for _layout_try in range(100):
        r_tgt = half_sizes[target_index] * scale
        sx, sy, sz = sample_point(config.obj_x_band, config.obj_y_band, r_tgt + 2)
        dx, dy, dz = sample_point(config.obj_x_band, config.obj_y_band, r_tgt + 2)
        if np.hypot(dx - sx, dy - sy) < config.min_move_px * scale:
            continue
        positions[target_index] = backproject(sx, sy, sz, config)
        placed_px = [(sx, sy, half_sizes[target_index]), (dx, dy, half_sizes[target_index])]
        placed_all = True
        for k in range(config.num_objects):
            if k == target_index:
                continue
            for _ in range(300):
                ox, oy, oz = sample_point(
                    config.obj_x_band, distractor_y_band, half_sizes[k] * scale + 2
                )
                clearance = (
                    half_sizes[k] + half_sizes[target_index]
                ) * scale + config.corridor_margin_px * scale
                if _point_segment_distance((ox, oy), (sx, sy), (dx, dy)) < clearance:
                    continue
                if any(
                    np.hypot(ox - qx, oy - qy) < (half_sizes[k] + qr) * scale + 2
                    for qx, qy, qr in placed_px
                ):
                    continue
                placed_px.append((ox, oy, half_sizes[k]))
                positions[k] = backproject(ox, oy, oz, config)
                break
            else:
                placed_all = False
                break
        if placed_all:
            break
    else:  # pragma: no cover - 100 layouts always admit a placement
        raise ConfigInvalid("could not sample a consistent scene layout")

    gx = rng.uniform(config.grip_x_band[0] * W, config.grip_x_band[1] * W)
    gy = rng.uniform(config.grip_y_band[0] * H, config.grip_y_band[1] * H)
    gz = rng.uniform(config.z_min + 0.1, config.z_max - 0.1)
    gripper_start = backproject(gx, gy, gz, config)

    objects = tuple(
        ObjectSpec(
            shape=shapes[k],
            color=OBJECT_COLORS[color_names[k]],
            color_name=color_names[k],
            half_size=half_sizes[k],
            position=positions[k],
        )
        for k in range(config.num_objects)
    )
    return SceneSpec(
        seed=seed,
        background_id=background_id,
        objects=objects,
        gripper_start=gripper_start,
        target_index=target_index,
        destination=backproject(dx, dy, dz, config),
    )
