from .trajectory import Trajectory, mask_center, build_trajectory
from .captions import augment_caption, plain_caption, parse_caption
from .conditions import ConditionMode, FeatureVolume
from .overlay import render_reference_overlay, depth_color
from .features import (
    RandomProjectionExtractor,
    extract_object_features,
    propagate_features,
    temporal_interpolate,
)
from .bundles import ConditionBundle, ConditionSource, build_conditions

__all__ = [
    "Trajectory", "mask_center", "build_trajectory",
    "augment_caption", "plain_caption", "parse_caption",
    "ConditionMode", "FeatureVolume",
    "render_reference_overlay", "depth_color",
    "RandomProjectionExtractor", "extract_object_features", "propagate_features",
    "temporal_interpolate",
    "ConditionBundle", "ConditionSource", "build_conditions",
]
