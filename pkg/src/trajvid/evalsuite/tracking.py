"""Color-key object tracking in generated videos.

The scene palette guarantees pairwise max-channel separation of at least 0.3,
so keying the target color at tolerance 0.25 can never pick up a distractor,
the gripper, or the background.
"""
from __future__ import annotations

import numpy as np

from ..trajrep.trajectory import Trajectory


def extract_generated_trajectory(
    video: np.ndarray,
    object_color,
    tolerance: float = 0.25,
    start_point: tuple[int, int] | None = None,
) -> Trajectory:
    """Per-frame centroid of pixels within `tolerance` (max-channel distance)
    of object_color. Frames with no match reuse the previous point; if frame 0
    has no match it falls back to the conditioned start point (or the image
    center when none was given). Depth fields are left at zero.
    """
    video = np.asarray(video)
    N, _, H, W = video.shape
    color = np.asarray(object_color, dtype=np.float32).reshape(3, 1, 1)
    if start_point is None:
        start_point = (W // 2, H // 2)
    prev = (int(start_point[0]), int(start_point[1]))
    points = []
    for i in range(N):
        dist = np.abs(video[i] - color).max(axis=0)
        ys, xs = np.nonzero(dist <= tolerance)
        if xs.size:
            prev = (int(np.floor(xs.mean() + 0.5)), int(np.floor(ys.mean() + 0.5)))
        points.append((prev[0], prev[1], 0.0))
    return Trajectory(points=tuple(points))
