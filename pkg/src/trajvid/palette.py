"""Colors, shapes, and the object vocabulary shared by the simulator,
captions, and the text encoder.

Object colors are chosen with pairwise max-channel distance >= 0.3 so a
color key at tolerance 0.25 identifies each object uniquely; the gripper and
all backgrounds stay well clear of every object color.
"""
from __future__ import annotations

OBJECT_COLORS: dict[str, tuple[float, float, float]] = {
    "red": (0.90, 0.10, 0.10),
    "green": (0.10, 0.80, 0.15),
    "blue": (0.15, 0.25, 0.90),
    "yellow": (0.95, 0.85, 0.10),
    "magenta": (0.85, 0.10, 0.80),
    "cyan": (0.10, 0.80, 0.85),
    "orange": (0.95, 0.50, 0.05),
}

SHAPES = ("square", "disc", "triangle")

GRIPPER_COLOR = (0.78, 0.78, 0.80)

BACKGROUND_BASES = (
    (0.13, 0.13, 0.15),
    (0.17, 0.14, 0.11),
    (0.11, 0.16, 0.13),
    (0.15, 0.15, 0.09),
    (0.12, 0.12, 0.12),
    (0.16, 0.11, 0.15),
)

OBJECT_VOCABULARY = tuple(
    f"{color} {shape}" for color in OBJECT_COLORS for shape in SHAPES
)
