"""World state, actuation, and the success predicate."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..config import SimConfig
from .scene import SceneSpec, project


@dataclass(frozen=True)
class RobotState:
    gripper: tuple[float, float, float]
    grip: float  # 0 open .. 1 closed
    attached: int | None = None
    attach_offset: tuple[float, float, float] = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class WorldState:
    scene: SceneSpec
    config: SimConfig
    positions: tuple[tuple[float, float, float], ...]  # current object positions
    robot: RobotState
    ever_attached: frozenset[int] = frozenset()


def initial_state(scene: SceneSpec, config: SimConfig | None = None) -> WorldState:
    config = config or SimConfig()
    return WorldState(
        scene=scene,
        config=config,
        positions=tuple(o.position for o in scene.objects),
        robot=RobotState(gripper=scene.gripper_start, grip=0.0),
    )


def step(state: WorldState, command) -> WorldState:
    """Advance one tick toward command = (gx, gy, gz, grip).

    The gripper displacement is clamped to config.max_step; grip is set
    directly (clamped to [0, 1]). Attachment happens only on the tick where
    grip crosses 0.5 upward with an object inside the grasp radius; while
    attached the object follows the gripper rigidly; grip <= 0.5 releases.
    """
    command = np.asarray(command, dtype=np.float64)
    if command.shape != (4,) or not np.isfinite(command).all():
        raise ValueError(f"command must be 4 finite values, got {command!r}")
    cfg = state.config
    cur = np.asarray(state.robot.gripper, dtype=np.float64)
    delta = command[:3] - cur
    dist = float(np.linalg.norm(delta))
    if dist > cfg.max_step:
        delta = delta * (cfg.max_step / dist)
    new_gripper = tuple(float(v) for v in cur + delta)
    new_grip = float(np.clip(command[3], 0.0, 1.0))

    attached = state.robot.attached
    offset = state.robot.attach_offset
    ever = state.ever_attached
    positions = list(state.positions)

    if attached is not None and new_grip <= 0.5:
        attached = None
    if attached is None and new_grip > 0.5 and state.robot.grip <= 0.5:
        dists = [
            float(np.linalg.norm(np.asarray(p) - np.asarray(new_gripper)))
            for p in positions
        ]
        k = int(np.argmin(dists))
        if dists[k] <= cfg.grasp_radius:
            attached = k
            offset = tuple(float(a - b) for a, b in zip(positions[k], new_gripper))
            ever = ever | {k}
    if attached is not None:
        positions[attached] = tuple(float(g + o) for g, o in zip(new_gripper, offset))

    return replace(
        state,
        positions=tuple(positions),
        robot=RobotState(new_gripper, new_grip, attached, offset),
        ever_attached=ever,
    )


def evaluate_success(final_state: WorldState, scene: SceneSpec, tol_px: float) -> bool:
    """True iff the target was grasped at some point, released, and its
    projected center sits within tol_px (L2) of the projected destination."""
    if tol_px <= 0:
        raise ValueError(f"tol_px must be positive, got {tol_px}")
    cfg = final_state.config
    k = scene.target_index
    if k not in final_state.ever_attached:
        return False
    if final_state.robot.grip >= 0.5:
        return False
    px, py = project(final_state.positions[k], cfg)
    qx, qy = project(scene.destination, cfg)
    return float(np.hypot(px - qx, py - qy)) <= tol_px
