"""Assembling the full condition set for one generation request."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimMismatch, EmptyMask
from ..latentcodec import LatentVideo
from .captions import augment_caption, parse_caption, plain_caption
from .conditions import ConditionMode, FeatureVolume
from .features import extract_object_features, object_bbox, propagate_features
from .overlay import render_reference_overlay
from .trajectory import Trajectory


@dataclass(frozen=True)
class ConditionSource:
    """Raw ingredients: a first frame plus whatever the mode needs."""

    first_frame: np.ndarray  # 3 x H x W
    object_name: str
    robot_point: tuple[int, int]
    trajectory: Trajectory | None = None
    mask0: np.ndarray | None = None
    caption_override: str | None = None

    @staticmethod
    def from_episode(episode) -> "ConditionSource":
        robot = parse_caption(episode.caption).get("robot", (0, 0))
        k = episode.scene.target_index
        return ConditionSource(
            first_frame=episode.rgb[0],
            object_name=episode.scene.objects[k].name,
            robot_point=robot,
            trajectory=episode.traj_gt,
            mask0=episode.masks[k, 0],
        )


@dataclass(frozen=True)
class ConditionBundle:
    z0_ref: LatentVideo
    y_feat: FeatureVolume | None
    y_text: np.ndarray | None
    caption: str
    mode: ConditionMode

    def __post_init__(self):
        if (self.y_feat is not None) != self.mode.uses_features:
            raise DimMismatch("y_feat must be present exactly for the feature mode")
        if self.z0_ref.values.shape[1] != 1:
            raise DimMismatch("reference latent must have a single frame")
        if self.z0_ref.stream_tag != "REF":
            raise DimMismatch("reference latent must be tagged REF")


def build_conditions(
    source,
    mode: ConditionMode,
    codec,
    extractor=None,
    text_encoder=None,
) -> ConditionBundle:
    """Build the condition bundle for `mode` from an episode or raw source."""
    if not isinstance(source, ConditionSource):
        source = ConditionSource.from_episode(source)
    frame = np.asarray(source.first_frame, dtype=np.float32)
    H, W = frame.shape[1:]

    traj = source.trajectory
    if mode.needs_trajectory:
        if traj is None:
            raise DimMismatch(f"mode {mode.name} requires a trajectory")
        traj.validate(W, H)
        ref_frame = render_reference_overlay(frame, traj, source.robot_point, mode)
        caption = source.caption_override or augment_caption(
            0, source.object_name, source.robot_point, traj, image_size=(W, H)
        )
    else:
        ref_frame = frame
        caption = source.caption_override or plain_caption(source.object_name)

    z0_ref = codec.encode_video(ref_frame[:, None], stream_tag="REF")

    y_feat = None
    if mode.uses_features:
        if source.mask0 is None:
            raise EmptyMask("feature mode requires the first-frame object mask")
        patch = extract_object_features(frame, source.mask0, extractor)
        _, _, bh, bw = object_bbox(source.mask0)
        N = len(traj)
        n, h, w = codec.latent_shape(N, H, W)
        footprint = (max(1, round(bh * h / H)), max(1, round(bw * w / W)))
        y_feat = propagate_features(
            patch, traj, (n, h, w), N, image_size=(W, H), footprint=footprint
        )

    y_text = np.asarray(text_encoder(caption)) if text_encoder is not None else None
    return ConditionBundle(z0_ref=z0_ref, y_feat=y_feat, y_text=y_text, caption=caption, mode=mode)
