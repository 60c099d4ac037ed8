"""Reference-frame overlay: markers plus the depth-color-coded trajectory line.

The blue disc marks the robot, red the object start, green the destination.
For 2D trajectory modes the path is a white polyline; for 3D modes each
segment is colored (d, 0, 1-d) from its start depth, so near is blue and far
is red. Lines are drawn first, discs on top.
"""
from __future__ import annotations

import numpy as np

from ..errors import OutOfBounds
from .conditions import ConditionMode
from .trajectory import Trajectory

MARKER_RADIUS = 2.0
LINE_WIDTH = 2.0

BLUE = (0.0, 0.0, 1.0)
RED = (1.0, 0.0, 0.0)
GREEN = (0.0, 1.0, 0.0)
WHITE = (1.0, 1.0, 1.0)


def depth_color(d: float) -> tuple[float, float, float]:
    return (float(d), 0.0, float(1.0 - d))


def _paint_disc(img: np.ndarray, x: float, y: float, color, radius: float) -> None:
    H, W = img.shape[1:]
    y0, y1 = max(int(y - radius) - 1, 0), min(int(y + radius) + 2, H)
    x0, x1 = max(int(x - radius) - 1, 0), min(int(x + radius) + 2, W)
    ys, xs = np.mgrid[y0:y1, x0:x1]
    hit = (xs - x) ** 2 + (ys - y) ** 2 <= radius**2
    img[:, y0:y1, x0:x1][:, hit] = np.asarray(color, dtype=np.float32)[:, None]


def _paint_segment(img: np.ndarray, a, b, color, width: float) -> None:
    H, W = img.shape[1:]
    ax, ay = a
    bx, by = b
    r = width / 2.0
    y0 = max(int(min(ay, by) - r) - 1, 0)
    y1 = min(int(max(ay, by) + r) + 2, H)
    x0 = max(int(min(ax, bx) - r) - 1, 0)
    x1 = min(int(max(ax, bx) + r) + 2, W)
    if y0 >= y1 or x0 >= x1:
        return
    ys, xs = np.mgrid[y0:y1, x0:x1]
    vx, vy = bx - ax, by - ay
    denom = vx * vx + vy * vy
    if denom == 0:
        t = np.zeros_like(xs, dtype=np.float64)
    else:
        t = np.clip(((xs - ax) * vx + (ys - ay) * vy) / denom, 0.0, 1.0)
    dist2 = (xs - (ax + t * vx)) ** 2 + (ys - (ay + t * vy)) ** 2
    hit = dist2 <= r * r
    img[:, y0:y1, x0:x1][:, hit] = np.asarray(color, dtype=np.float32)[:, None]


def render_reference_overlay(
    first_frame: np.ndarray,
    traj: Trajectory,
    robot_point: tuple[int, int],
    mode: ConditionMode,
) -> np.ndarray:
    """Copy of first_frame with the conditioning markers painted on."""
    if not mode.needs_trajectory:
        raise ValueError(f"overlay is undefined for mode {mode.name}")
    frame = np.array(first_frame, dtype=np.float32, copy=True)
    if frame.ndim != 3 or frame.shape[0] != 3:
        raise OutOfBounds(f"first frame must be 3 x H x W, got {frame.shape}")
    H, W = frame.shape[1:]
    pts = [(robot_point[0], robot_point[1])] + [(p[0], p[1]) for p in traj.points]
    for x, y in pts:
        if not (0 <= x < W and 0 <= y < H):
            raise OutOfBounds(f"overlay point ({x}, {y}) outside {W}x{H}")

    if mode.draws_line:
        for i in range(len(traj) - 1):
            a = (traj[i][0], traj[i][1])
            b = (traj[i + 1][0], traj[i + 1][1])
            color = depth_color(traj[i][2]) if mode.depth_colored else WHITE
            _paint_segment(frame, a, b, color, LINE_WIDTH)

    _paint_disc(frame, robot_point[0], robot_point[1], BLUE, MARKER_RADIUS)
    _paint_disc(frame, traj[0][0], traj[0][1], RED, MARKER_RADIUS)
    last = traj[len(traj) - 1]
    _paint_disc(frame, last[0], last[1], GREEN, MARKER_RADIUS)
    return frame
