"""Simulator tests: determinism, rendering against a brute-force oracle,
stepping semantics, and the success predicate."""
from __future__ import annotations

import dataclasses

import numpy as np
import pytest

from trajvid.config import SimConfig
from trajvid.errors import ConfigInvalid, Unreachable
from trajvid.synthworld import (
    evaluate_success,
    initial_state,
    make_scene,
    render,
    rollout_scripted,
    step,
)
from trajvid.synthworld.render import scene_entities
from trajvid.synthworld.scene import OBJECT_COLORS, SceneSpec, backproject, project
from trajvid.synthworld.scene import background_image, relative_depth
from trajvid.trajrep import build_trajectory


def brute_force_depth(state, config) -> np.ndarray:
    """Independent per-pixel z-min oracle over all scene entities."""
    H, W = config.height, config.width
    out = np.ones((H, W), dtype=np.float64)
    for e in scene_entities(state, config):
        for y in range(H):
            for x in range(W):
                dx, dy = x - e.cx, y - e.cy
                if e.kind in ("square", "bar"):
                    hit = abs(dx) <= e.rx and abs(dy) <= e.ry
                elif e.kind == "disc":
                    hit = dx * dx + dy * dy <= e.rx * e.rx
                else:  # triangle
                    r = e.rx
                    hit = -4 * r / 3 <= dy <= 2 * r / 3 and abs(dx) <= (dy + 4 * r / 3) / 2
                if hit:
                    d = (e.z - config.z_min) / (config.z_max - config.z_min)
                    out[y, x] = min(out[y, x], min(max(d, 0.0), 1.0))
    return np.round(out * 65535.0) / np.float32(65535.0)


# --- make_scene -------------------------------------------------------------

def test_make_scene_deterministic():
    cfg = SimConfig()
    a, b = make_scene(0, cfg), make_scene(0, cfg)
    assert a == b


def test_make_scene_seed_changes_fields():
    a, b = make_scene(0), make_scene(1)
    assert a != b


def test_make_scene_invalid_object_count():
    with pytest.raises(ConfigInvalid):
        SimConfig(num_objects=5)
    with pytest.raises(ConfigInvalid):
        SimConfig(num_objects=0)


def test_make_scene_invalid_resolution():
    with pytest.raises(ConfigInvalid):
        SimConfig(height=63, width=63)
    with pytest.raises(ConfigInvalid):
        SimConfig(height=64, width=128)


def test_scene_invariants():
    cfg = SimConfig(num_objects=4)
    for seed in range(20):
        scene = make_scene(seed, cfg)
        assert scene.target_index < len(scene.objects)
        colors = [o.color for o in scene.objects]
        for i in range(len(colors)):
            for j in range(i + 1, len(colors)):
                assert max(abs(a - b) for a, b in zip(colors[i], colors[j])) >= 0.3
        # every object fully inside the frame at t=0
        state = initial_state(scene, cfg)
        _, _, masks = render(state, cfg)
        for k in range(len(scene.objects)):
            m = masks[k]
            assert m.sum() > 0
            ys, xs = np.nonzero(m)
            assert ys.min() > 0 and ys.max() < cfg.height - 1
            assert xs.min() > 0 and xs.max() < cfg.width - 1


def test_palette_pairwise_separation():
    cols = list(OBJECT_COLORS.values())
    for i in range(len(cols)):
        for j in range(i + 1, len(cols)):
            assert max(abs(a - b) for a, b in zip(cols[i], cols[j])) >= 0.3


# --- render ----------------------------------------------------------------

def test_render_empty_scene_background_and_far_plane():
    cfg = SimConfig()
    scene = make_scene(0, cfg)
    empty = dataclasses.replace(scene, objects=())
    state = initial_state(empty, cfg)
    # suppress the gripper by parking it behind the far plane bound: instead
    # compare only pixels outside the gripper mask
    rgb, depth, masks = render(state, cfg)
    bg = background_image(empty.seed, empty.background_id, cfg)
    bg = np.round(bg * 255.0) / np.float32(255.0)
    ents = scene_entities(state, cfg)
    grip_cols = np.zeros((cfg.height, cfg.width), dtype=bool)
    for e in ents:
        y0, y1 = int(e.cy - e.ry) - 1, int(e.cy + e.ry) + 2
        x0, x1 = int(e.cx - e.rx) - 1, int(e.cx + e.rx) + 2
        grip_cols[max(y0, 0) : y1, max(x0, 0) : x1] = True
    assert masks.shape[0] == 0
    assert np.array_equal(rgb[:, ~grip_cols], bg[:, ~grip_cols])
    assert np.all(depth[0][~grip_cols] == 1.0)


def test_render_object_at_near_plane_depth_zero():
    cfg = SimConfig()
    scene = make_scene(3, cfg)
    obj = dataclasses.replace(scene.objects[0], position=backproject(32, 40, cfg.z_min, cfg))
    scene = dataclasses.replace(scene, objects=(obj,), target_index=0)
    state = initial_state(scene, cfg)
    _, depth, masks = render(state, cfg)
    assert masks[0].sum() > 0
    assert np.all(depth[0][masks[0] > 0] == 0.0)


def test_render_occlusion_against_bruteforce_oracle():
    cfg = SimConfig()
    base = make_scene(5, cfg)
    # two overlapping squares at different depths
    o1 = dataclasses.replace(
        base.objects[0], shape="square", position=backproject(30, 40, 1.7, cfg), half_size=6.0
    )
    o2 = dataclasses.replace(
        base.objects[1], shape="square", position=backproject(34, 42, 2.3, cfg), half_size=6.0
    )
    scene = dataclasses.replace(base, objects=(o1, o2), target_index=0)
    state = initial_state(scene, cfg)
    _, depth, masks = render(state, cfg)
    oracle = brute_force_depth(state, cfg)
    assert np.allclose(depth[0], oracle, atol=0)
    # occluded pixels belong to the nearer object's mask only
    assert not (masks[0] & masks[1]).any()
    near1 = relative_depth(1.7, cfg)
    overlap = (np.abs(depth[0] - np.float32(np.round(near1 * 65535) / 65535.0)) < 1e-6) & (
        masks[0] > 0
    )
    assert overlap.sum() > 0


def test_render_masks_pairwise_disjoint_many_scenes():
    cfg = SimConfig(num_objects=4)
    for seed in range(8):
        ep = rollout_scripted(make_scene(seed, cfg), cfg)
        for i in range(ep.masks.shape[1]):
            total = ep.masks[:, i].sum(axis=0)
            assert total.max() <= 1


# --- step ------------------------------------------------------------------

def test_step_fixed_point():
    cfg = SimConfig()
    state = initial_state(make_scene(0, cfg), cfg)
    cmd = np.array([*state.robot.gripper, state.robot.grip])
    after = step(state, cmd)
    assert after.robot == state.robot
    assert after.positions == state.positions


def test_step_attach_within_radius():
    cfg = SimConfig()
    scene = make_scene(1, cfg)
    state = initial_state(scene, cfg)
    k = scene.target_index
    pos = scene.objects[k].position
    state = step(state, np.array([*pos, 0.0]))  # may take several hops
    while np.linalg.norm(np.asarray(state.robot.gripper) - np.asarray(pos)) > 1e-9:
        state = step(state, np.array([*pos, 0.0]))
    state = step(state, np.array([*pos, 1.0]))
    assert state.robot.attached == k
    assert k in state.ever_attached


def test_step_attached_object_moves_rigidly():
    cfg = SimConfig()
    scene = make_scene(1, cfg)
    k = scene.target_index
    pos = np.asarray(scene.objects[k].position)
    state = initial_state(scene, cfg)
    while np.linalg.norm(np.asarray(state.robot.gripper) - pos) > 1e-9:
        state = step(state, np.array([*pos, 0.0]))
    state = step(state, np.array([*pos, 1.0]))
    delta = np.array([0.3, -0.2, 0.1])
    before = np.asarray(state.positions[k])
    state = step(state, np.array([*(np.asarray(state.robot.gripper) + delta), 1.0]))
    assert np.allclose(np.asarray(state.positions[k]) - before, delta)


def test_step_no_attach_without_crossing():
    """Grip already closed when arriving near an object: no attach."""
    cfg = SimConfig()
    scene = make_scene(1, cfg)
    k = scene.target_index
    pos = np.asarray(scene.objects[k].position)
    state = initial_state(scene, cfg)
    state = step(state, np.array([*state.robot.gripper, 1.0]))  # close far away
    assert state.robot.attached is None
    while np.linalg.norm(np.asarray(state.robot.gripper) - pos) > 1e-9:
        state = step(state, np.array([*pos, 1.0]))
    assert state.robot.attached is None


def test_step_clamps_to_max_step():
    cfg = SimConfig()
    state = initial_state(make_scene(0, cfg), cfg)
    start = np.asarray(state.robot.gripper)
    target = start + np.array([50.0, 0.0, 0.0])
    after = step(state, np.array([*target, 0.0]))
    assert np.isclose(
        np.linalg.norm(np.asarray(after.robot.gripper) - start), cfg.max_step
    )


# --- rollout & success -------------------------------------------------------

def test_rollout_scripted_success_and_shapes():
    cfg = SimConfig()
    ep = rollout_scripted(make_scene(7, cfg), cfg)
    N, H, W = cfg.frames, cfg.height, cfg.width
    assert ep.rgb.shape == (N, 3, H, W)
    assert ep.depth.shape == (N, 1, H, W)
    assert ep.masks.shape == (len(ep.scene.objects), N, H, W)
    assert ep.joints.shape == (N, 4)
    assert len(ep.traj_gt) == N
    assert ep.success
    assert np.all(ep.depth >= 0) and np.all(ep.depth <= 1)
    assert set(np.unique(ep.masks)).issubset({0, 1})


def test_rollout_zero_displacement_destination():
    cfg = SimConfig()
    scene = make_scene(7, cfg)
    scene = dataclasses.replace(
        scene, destination=scene.objects[scene.target_index].position
    )
    ep = rollout_scripted(scene, cfg)
    pts = np.asarray([p[:2] for p in ep.traj_gt.points])
    assert np.all(pts == pts[0])
    depths = np.asarray([p[2] for p in ep.traj_gt.points])
    assert np.allclose(depths, depths[0], atol=1e-6)


def test_rollout_projected_transport_monotone():
    """The projected trajectory advances monotonically along the projected
    transport segment (compared against the direct projection of the line)."""
    cfg = SimConfig()
    for seed in (2, 9, 14):
        scene = make_scene(seed, cfg)
        ep = rollout_scripted(scene, cfg)
        s = np.asarray(project(scene.objects[scene.target_index].position, cfg))
        e = np.asarray(project(scene.destination, cfg))
        u = (e - s) / (np.linalg.norm(e - s) + 1e-12)
        prog = [float((np.array(p[:2], dtype=float) - s) @ u) for p in ep.traj_gt.points]
        assert all(b >= a - 0.71 for a, b in zip(prog, prog[1:]))  # rounding slack
        assert abs(prog[-1] - np.linalg.norm(e - s)) <= 0.71


def test_rollout_unreachable_destination():
    cfg = SimConfig()
    scene = make_scene(0, cfg)
    bad = dataclasses.replace(scene, destination=(0.0, 0.0, cfg.z_max + 5.0))
    with pytest.raises(Unreachable):
        rollout_scripted(bad, cfg)
    far = backproject(200, 30, 2.0, cfg)
    with pytest.raises(Unreachable):
        rollout_scripted(dataclasses.replace(scene, destination=far), cfg)


def test_evaluate_success_cases():
    cfg = SimConfig()
    scene = make_scene(11, cfg)
    ep = rollout_scripted(scene, cfg)
    # rebuild the final state by replaying the script
    from trajvid.synthworld.rollout import scripted_commands

    state = initial_state(scene, cfg)
    for cmd in scripted_commands(scene, cfg):
        state = step(state, cmd)
    assert evaluate_success(state, scene, tol_px=3.0)

    # never-grasped object parked at the destination is not success
    parked = dataclasses.replace(
        scene,
        objects=tuple(
            dataclasses.replace(o, position=scene.destination) if i == scene.target_index else o
            for i, o in enumerate(scene.objects)
        ),
    )
    assert not evaluate_success(initial_state(parked, cfg), parked, tol_px=3.0)


def test_evaluate_success_release_offset_fails():
    cfg = SimConfig()
    scene = make_scene(11, cfg)
    k = scene.target_index
    pos = np.asarray(scene.objects[k].position)
    state = initial_state(scene, cfg)
    while np.linalg.norm(np.asarray(state.robot.gripper) - pos) > 1e-9:
        state = step(state, np.array([*pos, 0.0]))
    state = step(state, np.array([*pos, 1.0]))
    # carry to a point whose projection is ~10 px from the destination
    dest = np.asarray(scene.destination)
    sdest = cfg.focal / (dest[2] + cfg.z_near)
    off = dest + np.array([10.0 / sdest, 0.0, 0.0])
    for _ in range(20):
        state = step(state, np.array([*off, 1.0]))
    state = step(state, np.array([*off, 0.0]))
    assert not evaluate_success(state, scene, tol_px=3.0)
    assert evaluate_success(state, scene, tol_px=11.0)


def test_episode_determinism_bitwise():
    cfg = SimConfig()
    a = rollout_scripted(make_scene(21, cfg), cfg)
    b = rollout_scripted(make_scene(21, cfg), cfg)
    assert np.array_equal(a.rgb, b.rgb)
    assert np.array_equal(a.depth, b.depth)
    assert np.array_equal(a.masks, b.masks)
    assert np.array_equal(a.joints, b.joints)
    assert a.caption == b.caption
    assert a.traj_gt == b.traj_gt


def test_traj_gt_matches_mask_center_and_depth_buffer():
    cfg = SimConfig()
    for seed in range(10):
        ep = rollout_scripted(make_scene(seed, cfg), cfg)
        got = build_trajectory(ep.masks[ep.scene.target_index], ep.depth)
        assert np.abs(got.xy - ep.traj_gt.xy).max() <= 1.0
        for i, (x, y, d) in enumerate(ep.traj_gt.points):
            if ep.masks[ep.scene.target_index, i, y, x]:
                assert ep.depth[i, 0, y, x] == np.float32(d)
