"""Painter's-algorithm rasterizer with a per-pixel depth buffer.

Rendering is hard-edged (no anti-aliasing) so object masks are exactly the
visible pixel sets and color-key tracking sees exact palette colors. RGB is
quantized to 8-bit levels and depth to 16-bit levels, matching what survives
the on-disk PNG format.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..config import SimConfig
from .scene import GRIPPER_COLOR, apparent_half_size, background_image, project, relative_depth
from .world import WorldState

GRIPPER_OWNER = -2
BACKGROUND_OWNER = -1


@dataclass(frozen=True)
class _Entity:
    owner: int  # object index, or GRIPPER_OWNER
    kind: str  # square | disc | triangle | bar
    color: tuple[float, float, float]
    cx: float  # pixel center
    cy: float
    rx: float  # pixel half-extent (radius for disc)
    ry: float
    z: float


def _coverage(e: _Entity, config: SimConfig) -> tuple[slice, slice, np.ndarray] | None:
    H, W = config.height, config.width
    ry = e.ry * (4.0 / 3.0) if e.kind == "triangle" else e.ry
    x0 = max(int(np.floor(e.cx - e.rx)) - 1, 0)
    x1 = min(int(np.ceil(e.cx + e.rx)) + 2, W)
    y0 = max(int(np.floor(e.cy - ry)) - 1, 0)
    y1 = min(int(np.ceil(e.cy + ry)) + 2, H)
    if x0 >= x1 or y0 >= y1:
        return None
    ys, xs = np.mgrid[y0:y1, x0:x1]
    dx = xs - e.cx
    dy = ys - e.cy
    if e.kind == "square" or e.kind == "bar":
        hit = (np.abs(dx) <= e.rx) & (np.abs(dy) <= e.ry)
    elif e.kind == "disc":
        hit = dx * dx + dy * dy <= e.rx * e.rx
    elif e.kind == "triangle":
        # isoceles, apex up, vertices chosen so the area centroid is (cx, cy):
        # apex at dy = -4r/3, base at dy = +2r/3 with half-width r
        r = e.rx
        hit = (dy >= -4.0 * r / 3.0) & (dy <= 2.0 * r / 3.0) & (
            np.abs(dx) <= (dy + 4.0 * r / 3.0) / 2.0
        )
    else:  # pragma: no cover
        raise ValueError(e.kind)
    if not hit.any():
        return None
    return slice(y0, y1), slice(x0, x1), hit


def scene_entities(state: WorldState, config: SimConfig) -> list[_Entity]:
    ents: list[_Entity] = []
    for k, obj in enumerate(state.scene.objects):
        pos = state.positions[k]
        px, py = project(pos, config)
        r = apparent_half_size(obj.half_size, pos[2], config) * (config.width / 64.0)
        ents.append(_Entity(k, obj.shape, obj.color, px, py, r, r, pos[2]))
    # gripper: two finger bars flanking the grasp point
    gx, gy, gz = state.robot.gripper
    scale = config.focal / (gz + config.z_near)
    px, py = project((gx, gy, gz), config)
    dx = config.finger_spread * scale
    bw = config.finger_halfwidth * scale
    bh = config.finger_halfheight * scale
    for side in (-1.0, 1.0):
        ents.append(_Entity(GRIPPER_OWNER, "bar", GRIPPER_COLOR, px + side * dx, py, bw, bh, gz))
    return ents


def render(state: WorldState, config: SimConfig | None = None):
    """Render one frame.

    Returns (rgb 3xHxW float32, depth 1xHxW float32, masks KxHxW uint8).
    Depth is relative in [0, 1]; pixels nothing covers sit at the far plane 1.0.
    """
    config = config or state.config
    H, W = config.height, config.width
    rgb = background_image(state.scene.seed, state.scene.background_id, config).copy()
    depth = np.ones((H, W), dtype=np.float32)
    owner = np.full((H, W), BACKGROUND_OWNER, dtype=np.int32)

    ents = scene_entities(state, config)
    # far to near; ties resolved by list order, gripper last so it wins ties
    order = sorted(range(len(ents)), key=lambda i: (-ents[i].z, i))
    for i in order:
        e = ents[i]
        if not np.isfinite([e.cx, e.cy, e.z]).all():
            raise ValueError("non-finite entity position")
        cov = _coverage(e, config)
        if cov is None:
            continue
        ys, xs, hit = cov
        d = relative_depth(e.z, config)
        rgb[:, ys, xs][:, hit] = np.array(e.color, dtype=np.float32)[:, None]
        depth[ys, xs][hit] = d
        owner[ys, xs][hit] = e.owner

    rgb = np.round(rgb * 255.0) / np.float32(255.0)
    depth = np.round(depth * 65535.0) / np.float32(65535.0)
    n_obj = len(state.scene.objects)
    if n_obj:
        masks = np.stack([(owner == k).astype(np.uint8) for k in range(n_obj)])
    else:
        masks = np.zeros((0, H, W), dtype=np.uint8)
    return rgb.astype(np.float32), depth[None].astype(np.float32), masks
