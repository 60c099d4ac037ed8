"""Coordinate-augmented captions and their exact inverse parser.

The caption instantiates a fixed template with integer pixel coordinates for
the robot (blue), the object start (red), and the destination (green). Every
coordinate is printed as a standalone token so the text encoder can consume
it through a closed vocabulary and the parser can recover it exactly.
"""
from __future__ import annotations

import re

from ..errors import OutOfBounds, UnknownObject
from ..palette import OBJECT_VOCABULARY

FULL_TEMPLATE = (
    "the robotic arm at blue point ( {rx} , {ry} ) moves to the {obj} at red point "
    "( {sx} , {sy} ) , picks it up , and then moves to green point ( {ex} , {ey} )"
)

PLAIN_TEMPLATE = "the robotic arm moves to the {obj} , picks it up , and then moves it"

_COORD_RE = re.compile(r"\( (\d+) , (\d+) \)")


def augment_caption(
    template_id: int,
    object_name: str,
    robot_point,
    traj,
    image_size: tuple[int, int] = (64, 64),
) -> str:
    """Instantiate the caption template with pixel coordinates.

    robot_point: (x, y); traj supplies the start (red) and end (green) points.
    """
    if template_id != 0:
        raise ValueError(f"unknown template id {template_id}")
    if object_name not in OBJECT_VOCABULARY:
        raise UnknownObject(f"object {object_name!r} not in the simulator vocabulary")
    W, H = image_size
    rx, ry = int(robot_point[0]), int(robot_point[1])
    sx, sy, _ = traj[0]
    ex, ey, _ = traj[len(traj) - 1]
    for x, y in ((rx, ry), (sx, sy), (ex, ey)):
        if not (0 <= x < W and 0 <= y < H):
            raise OutOfBounds(f"caption coordinate ({x}, {y}) outside {W}x{H}")
    return FULL_TEMPLATE.format(obj=object_name, rx=rx, ry=ry, sx=sx, sy=sy, ex=ex, ey=ey)


def plain_caption(object_name: str) -> str:
    """Caption without any coordinate information (first-frame modes)."""
    if object_name not in OBJECT_VOCABULARY:
        raise UnknownObject(f"object {object_name!r} not in the simulator vocabulary")
    return PLAIN_TEMPLATE.format(obj=object_name)


def parse_caption(caption: str) -> dict:
    """Recover the coordinates printed by augment_caption, exactly.

    Returns {"robot": (x, y), "start": (x, y), "end": (x, y)}; entries are
    absent for captions that carry no coordinates.
    """
    pairs = [(int(a), int(b)) for a, b in _COORD_RE.findall(caption)]
    out = {}
    if len(pairs) == 3:
        out["robot"], out["start"], out["end"] = pairs
    return out
