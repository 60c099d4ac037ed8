"""Condition modes (the ablation ladder) and the bundle handed to the denoiser."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from ..errors import DimMismatch


class ConditionMode(enum.IntEnum):
    """Conditioning ladder, ordered by information content."""

    FIRST_FRAME_RGB = 0
    FIRST_FRAME_MULTIMODAL = 1
    POINT = 2
    TRAJ_2D = 3
    TRAJ_3D = 4
    TRAJ_3D_FEAT = 5

    @property
    def needs_trajectory(self) -> bool:
        return self >= ConditionMode.POINT

    @property
    def multimodal(self) -> bool:
        """Whether the depth stream is generated alongside RGB."""
        return self != ConditionMode.FIRST_FRAME_RGB

    @property
    def draws_line(self) -> bool:
        return self >= ConditionMode.TRAJ_2D

    @property
    def depth_colored(self) -> bool:
        return self >= ConditionMode.TRAJ_3D

    @property
    def uses_features(self) -> bool:
        return self == ConditionMode.TRAJ_3D_FEAT


@dataclass(frozen=True)
class FeatureVolume:
    """Object features pasted along the trajectory, aligned to latent dims."""

    values: np.ndarray  # C_f x n x h x w float32

    def __post_init__(self):
        v = self.values
        if v.ndim != 4:
            raise DimMismatch(f"feature volume must be C x n x h x w, got {v.shape}")
        if not np.isfinite(v).all():
            raise DimMismatch("feature volume contains non-finite values")

    @property
    def shape(self):
        return self.values.shape
