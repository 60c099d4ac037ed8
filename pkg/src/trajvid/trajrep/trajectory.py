"""Depth-aware trajectories: per-frame (x, y, d) triples and their wire format."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..errors import DimMismatch, EmptyMask


@dataclass(frozen=True)
class Trajectory:
    """Per-frame object path: integer pixel coordinates plus relative depth."""

    points: tuple[tuple[int, int, float], ...]

    def __len__(self) -> int:
        return len(self.points)

    def __getitem__(self, i):
        return self.points[i]

    @property
    def xy(self) -> np.ndarray:
        return np.array([(p[0], p[1]) for p in self.points], dtype=np.float64)

    @property
    def depths(self) -> np.ndarray:
        return np.array([p[2] for p in self.points], dtype=np.float64)

    def validate(self, width: int, height: int) -> None:
        for i, (x, y, d) in enumerate(self.points):
            if not (0 <= x < width and 0 <= y < height):
                raise DimMismatch(f"point {i} = ({x}, {y}) outside {width}x{height}")
            if not (0.0 <= d <= 1.0):
                raise DimMismatch(f"point {i} depth {d} outside [0, 1]")

    def to_json(self) -> str:
        return json.dumps({"points": [[int(x), int(y), float(d)] for x, y, d in self.points]})

    @staticmethod
    def from_json(blob: str | dict) -> "Trajectory":
        data = json.loads(blob) if isinstance(blob, str) else blob
        pts = tuple((int(x), int(y), float(d)) for x, y, d in data["points"])
        return Trajectory(points=pts)


def mask_center(mask: np.ndarray) -> tuple[int, int]:
    """Centroid of the set pixels, rounded to the nearest integer pixel.

    Returns (x, y). Raises EmptyMask when no pixel is set.
    """
    ys, xs = np.nonzero(np.asarray(mask))
    if xs.size == 0:
        raise EmptyMask()
    return int(np.floor(xs.mean() + 0.5)), int(np.floor(ys.mean() + 0.5))


def build_trajectory(masks: np.ndarray, depth_video: np.ndarray) -> Trajectory:
    """Trajectory from per-frame masks plus the depth video.

    masks: N x H x W binary; depth_video: N x 1 x H x W in [0, 1].
    Point i is the mask centroid with the depth sampled at that pixel.
    """
    masks = np.asarray(masks)
    depth_video = np.asarray(depth_video)
    if masks.ndim != 3 or depth_video.ndim != 4 or depth_video.shape[1] != 1:
        raise DimMismatch(
            f"expected masks NxHxW and depth Nx1xHxW, got {masks.shape} / {depth_video.shape}"
        )
    if masks.shape[0] != depth_video.shape[0] or masks.shape[1:] != depth_video.shape[2:]:
        raise DimMismatch(f"mask/depth dims disagree: {masks.shape} vs {depth_video.shape}")
    points = []
    for i in range(masks.shape[0]):
        try:
            x, y = mask_center(masks[i])
        except EmptyMask:
            raise EmptyMask(frame=i) from None
        points.append((x, y, float(depth_video[i, 0, y, x])))
    return Trajectory(points=tuple(points))
