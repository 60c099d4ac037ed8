"""Episode disk format and dataset manifests.

One directory per episode:
    meta.json                 scene, caption, joints, trajectory, success
    rgb/0000.png ...          8-bit RGB frames
    depth/0000.png ...        16-bit grayscale, value = round(d * 65535)
    mask_<k>/0000.png ...     binary masks, one tree per object
"""
from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np
from PIL import Image

from ..config import SimConfig, config_hash, dataclass_from_dict
from ..trajrep.trajectory import Trajectory
from .rollout import Episode, rollout_scripted
from .scene import ObjectSpec, SceneSpec, make_scene


def scene_to_dict(scene: SceneSpec) -> dict:
    d = dataclasses.asdict(scene)
    d["objects"] = [dataclasses.asdict(o) for o in scene.objects]
    return d


def scene_from_dict(d: dict) -> SceneSpec:
    objects = tuple(
        ObjectSpec(
            shape=o["shape"],
            color=tuple(o["color"]),
            color_name=o["color_name"],
            half_size=o["half_size"],
            position=tuple(o["position"]),
        )
        for o in d["objects"]
    )
    return SceneSpec(
        seed=d["seed"],
        background_id=d["background_id"],
        objects=objects,
        gripper_start=tuple(d["gripper_start"]),
        target_index=d["target_index"],
        destination=tuple(d["destination"]),
    )


def save_episode(ep: Episode, directory: str | Path, config: SimConfig) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    n = ep.rgb.shape[0]
    (directory / "rgb").mkdir(exist_ok=True)
    (directory / "depth").mkdir(exist_ok=True)
    for k in range(ep.masks.shape[0]):
        (directory / f"mask_{k}").mkdir(exist_ok=True)
    for i in range(n):
        rgb8 = np.round(ep.rgb[i] * 255.0).astype(np.uint8).transpose(1, 2, 0)
        Image.fromarray(rgb8, mode="RGB").save(directory / "rgb" / f"{i:04d}.png")
        d16 = np.round(ep.depth[i, 0] * 65535.0).astype(np.uint16)
        Image.fromarray(d16).save(directory / "depth" / f"{i:04d}.png")
        for k in range(ep.masks.shape[0]):
            m8 = (ep.masks[k, i] * 255).astype(np.uint8)
            Image.fromarray(m8, mode="L").save(directory / f"mask_{k}" / f"{i:04d}.png")
    meta = {
        "scene": scene_to_dict(ep.scene),
        "caption": ep.caption,
        "joints": ep.joints.tolist(),
        "traj_gt": json.loads(ep.traj_gt.to_json()),
        "success": ep.success,
        "frames": n,
        "height": ep.rgb.shape[2],
        "width": ep.rgb.shape[3],
        "fps": config.fps,
        "config_hash": config_hash(config),
    }
    (directory / "meta.json").write_text(json.dumps(meta, indent=1))


def load_episode(directory: str | Path) -> Episode:
    directory = Path(directory)
    meta = json.loads((directory / "meta.json").read_text())
    n = meta["frames"]
    scene = scene_from_dict(meta["scene"])
    rgbs, depths = [], []
    for i in range(n):
        rgb = np.asarray(Image.open(directory / "rgb" / f"{i:04d}.png"), dtype=np.float32)
        rgbs.append(rgb.transpose(2, 0, 1) / np.float32(255.0))
        d = np.asarray(Image.open(directory / "depth" / f"{i:04d}.png"), dtype=np.float32)
        depths.append(d[None] / np.float32(65535.0))
    k = 0
    masks = []
    while (directory / f"mask_{k}").exists():
        frames = [
            (np.asarray(Image.open(directory / f"mask_{k}" / f"{i:04d}.png")) > 127).astype(np.uint8)
            for i in range(n)
        ]
        masks.append(np.stack(frames))
        k += 1
    return Episode(
        rgb=np.stack(rgbs),
        depth=np.stack(depths),
        masks=np.stack(masks),
        joints=np.array(meta["joints"], dtype=np.float32),
        caption=meta["caption"],
        traj_gt=Trajectory.from_json(json.dumps(meta["traj_gt"])),
        scene=scene,
        success=meta["success"],
    )


def generate_dataset(
    out_dir: str | Path, count: int, seed: int, config: SimConfig | None = None
) -> dict:
    """Generate `count` scripted episodes under out_dir and write manifest.json."""
    config = config or SimConfig()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for i in range(count):
        ep_seed = seed + i
        scene = make_scene(ep_seed, config)
        ep = rollout_scripted(scene, config)
        name = f"ep_{ep_seed:06d}"
        save_episode(ep, out_dir / name, config)
        entries.append({"dir": name, "seed": ep_seed})
    manifest = {
        "episodes": entries,
        "seed": seed,
        "count": count,
        "config": dataclasses.asdict(config),
        "config_hash": config_hash(config),
        "frames": config.frames,
        "height": config.height,
        "width": config.width,
        "fps": config.fps,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=1))
    return manifest


def load_manifest(dataset_dir: str | Path) -> dict:
    return json.loads((Path(dataset_dir) / "manifest.json").read_text())


def manifest_config(manifest: dict) -> SimConfig:
    return dataclass_from_dict(SimConfig, manifest["config"])
