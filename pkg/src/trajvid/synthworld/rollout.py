"""Scripted pick-and-place rollouts with randomized phase timing."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..config import SimConfig
from ..errors import Unreachable
from ..trajrep.captions import augment_caption
from ..trajrep.trajectory import Trajectory
from .render import render
from .scene import SceneSpec, project, relative_depth
from .world import WorldState, evaluate_success, initial_state, step


@dataclass(frozen=True)
class Episode:
    rgb: np.ndarray  # N x 3 x H x W float32 in [0, 1]
    depth: np.ndarray  # N x 1 x H x W float32 in [0, 1]
    masks: np.ndarray  # K x N x H x W uint8 {0, 1}
    joints: np.ndarray  # N x 4 float32: gx, gy, gz, grip
    caption: str
    traj_gt: Trajectory
    scene: SceneSpec
    success: bool


def scripted_commands(scene: SceneSpec, config: SimConfig) -> list[np.ndarray]:
    """Per-tick commands for approach / grasp / transport, with per-scene
    randomized phase lengths and transport speed profile."""
    rng = np.random.default_rng(np.random.SeedSequence([scene.seed, 23]))
    budget = config.frames - 1
    a = max(2, int(round(budget * rng.uniform(0.18, 0.28))))
    b = max(1, int(round(budget * rng.uniform(0.12, 0.20))))
    r = max(1, int(round(budget * rng.uniform(0.06, 0.14))))
    tr = budget - a - b - 1 - r
    while tr < 2:  # small frame budgets: shorten approach first
        if a > 2:
            a -= 1
        elif b > 1:
            b -= 1
        else:
            r -= 1
        tr = budget - a - b - 1 - r
    gamma = float(rng.choice([0.7, 1.0, 1.4]))

    obj = np.asarray(scene.objects[scene.target_index].position)
    start = np.asarray(scene.gripper_start)
    dest = np.asarray(scene.destination)
    hover = obj + np.array([0.0, -config.hover_offset, 0.0])

    cmds: list[np.ndarray] = []
    for i in range(1, a + 1):
        cmds.append(np.append(start + (hover - start) * (i / a), 0.0))
    for i in range(1, b + 1):
        cmds.append(np.append(hover + (obj - hover) * (i / b), 0.0))
    cmds.append(np.append(obj, 1.0))
    for i in range(1, tr + 1):
        cmds.append(np.append(obj + (dest - obj) * (i / tr) ** gamma, 1.0))
    for _ in range(r):
        cmds.append(np.append(dest, 0.0))
    assert len(cmds) == budget
    return cmds


def rollout_scripted(scene: SceneSpec, config: SimConfig | None = None) -> Episode:
    """Run the three-phase script and record the fully labeled episode."""
    config = config or SimConfig()
    W, H = config.width, config.height

    dx, dy = project(scene.destination, config)
    if not (0 <= dx < W and 0 <= dy < H):
        raise Unreachable(f"destination projects outside the image: ({dx:.1f}, {dy:.1f})")
    if not (config.z_min <= scene.destination[2] <= config.z_max):
        raise Unreachable(f"destination depth {scene.destination[2]} outside the depth range")

    state = initial_state(scene, config)
    states = [state]
    for cmd in scripted_commands(scene, config):
        hop = np.linalg.norm(np.asarray(cmd[:3]) - np.asarray(states[-1].robot.gripper))
        assert hop <= config.max_step + 1e-9, "script produced an over-long hop"
        states.append(step(states[-1], cmd))

    rgbs, depths, masks_ = [], [], []
    points = []
    k = scene.target_index
    for s in states:
        rgb, depth, masks = render(s, config)
        rgbs.append(rgb)
        depths.append(depth)
        masks_.append(masks)
        px, py = project(s.positions[k], config)
        x = int(np.clip(np.floor(px + 0.5), 0, W - 1))
        y = int(np.clip(np.floor(py + 0.5), 0, H - 1))
        if masks[k, y, x]:
            d = float(depth[0, y, x])
        else:
            # center pixel occluded: report the object's own depth
            d = float(np.round(relative_depth(s.positions[k][2], config) * 65535.0) / np.float32(65535.0))
        points.append((x, y, d))

    joints = np.array(
        [[*s.robot.gripper, s.robot.grip] for s in states], dtype=np.float32
    )
    traj = Trajectory(points=tuple(points))
    robot_px = project(scene.gripper_start, config)
    robot_point = (int(np.floor(robot_px[0] + 0.5)), int(np.floor(robot_px[1] + 0.5)))
    caption = augment_caption(
        0, scene.objects[k].name, robot_point, traj, image_size=(W, H)
    )
    success = evaluate_success(states[-1], scene, config.tol_px * (H / 64.0))

    return Episode(
        rgb=np.stack(rgbs),
        depth=np.stack(depths),
        masks=np.stack(masks_).transpose(1, 0, 2, 3),
        joints=joints,
        caption=caption,
        traj_gt=traj,
        scene=scene,
        success=success,
    )
