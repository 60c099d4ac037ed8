"""Object appearance features: extraction from the first frame and
propagation along the trajectory into a latent-aligned volume.

The default extractor is a seeded random projection of the masked crop. It
keeps the contract a pretrained backbone would have (a deterministic summary
of the object's shape and appearance on a blank background) without weights;
anything honoring the same call signature can be plugged in instead.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimMismatch, EmptyMask
from .conditions import FeatureVolume
from .trajectory import Trajectory


def resize_bilinear(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Deterministic endpoint-aligned bilinear resize of a C x H x W array."""
    c, ih, iw = img.shape
    if ih == out_h and iw == out_w:
        return img.astype(np.float32, copy=True)
    ys = np.linspace(0, ih - 1, out_h) if out_h > 1 else np.zeros(1)
    xs = np.linspace(0, iw - 1, out_w) if out_w > 1 else np.zeros(1)
    y0 = np.floor(ys).astype(int).clip(0, max(ih - 2, 0))
    x0 = np.floor(xs).astype(int).clip(0, max(iw - 2, 0))
    y1 = np.minimum(y0 + 1, ih - 1)
    x1 = np.minimum(x0 + 1, iw - 1)
    wy = (ys - y0)[None, :, None]
    wx = (xs - x0)[None, None, :]
    a = img[:, y0][:, :, x0]
    b = img[:, y0][:, :, x1]
    cc = img[:, y1][:, :, x0]
    d = img[:, y1][:, :, x1]
    out = a * (1 - wy) * (1 - wx) + b * (1 - wy) * wx + cc * wy * (1 - wx) + d * wy * wx
    return out.astype(np.float32)


@dataclass(frozen=True)
class RandomProjectionExtractor:
    """Toy feature extractor: masked bbox crop -> p x p -> seeded 3->C_f map."""

    channels: int = 64
    patch: int = 8
    seed: int = 0

    def __call__(self, crop: np.ndarray) -> np.ndarray:
        if crop.ndim != 3 or crop.shape[0] != 3:
            raise DimMismatch(f"crop must be 3 x h x w, got {crop.shape}")
        rng = np.random.default_rng(np.random.SeedSequence([self.seed, 101]))
        w = rng.normal(0.0, 1.0, size=(self.channels, 3)).astype(np.float32)
        b = rng.normal(0.0, 0.1, size=(self.channels,)).astype(np.float32)
        resized = resize_bilinear(crop, self.patch, self.patch)
        out = np.tanh(np.einsum("cf,fhw->chw", w, resized) + b[:, None, None])
        return out.astype(np.float32)


def extract_object_features(
    first_frame: np.ndarray, mask0: np.ndarray, extractor=None
) -> np.ndarray:
    """Features of the masked object crop; background pixels are zeroed so the
    result depends only on pixels inside the bounding box."""
    extractor = extractor or RandomProjectionExtractor()
    mask0 = np.asarray(mask0)
    ys, xs = np.nonzero(mask0)
    if xs.size == 0:
        raise EmptyMask()
    y0, y1 = ys.min(), ys.max() + 1
    x0, x1 = xs.min(), xs.max() + 1
    crop = np.asarray(first_frame, dtype=np.float32)[:, y0:y1, x0:x1].copy()
    crop[:, mask0[y0:y1, x0:x1] == 0] = 0.0
    return extractor(crop)


def object_bbox(mask0: np.ndarray) -> tuple[int, int, int, int]:
    """(y0, x0, height, width) of the tight bounding box."""
    ys, xs = np.nonzero(np.asarray(mask0))
    if xs.size == 0:
        raise EmptyMask()
    return int(ys.min()), int(xs.min()), int(ys.max() - ys.min() + 1), int(xs.max() - xs.min() + 1)


def temporal_interpolate(volume: np.ndarray, n: int) -> np.ndarray:
    """Linear resampling along time; frame 0 -> 0 and frame N-1 -> n-1 exactly."""
    volume = np.asarray(volume)
    if volume.ndim != 4:
        raise DimMismatch(f"volume must be C x N x h x w, got {volume.shape}")
    N = volume.shape[1]
    if not (1 <= n <= N):
        raise DimMismatch(f"target length {n} outside [1, {N}]")
    if n == N:
        return volume.astype(np.float32, copy=True)
    src = np.linspace(0, N - 1, n) if n > 1 else np.zeros(1)
    i0 = np.floor(src).astype(int).clip(0, max(N - 2, 0))
    i1 = np.minimum(i0 + 1, N - 1)
    w = (src - i0).astype(np.float32)[None, :, None, None]
    out = volume[:, i0] * (1 - w) + volume[:, i1] * w
    return out.astype(np.float32)


def propagate_features(
    patch: np.ndarray,
    traj: Trajectory,
    latent_dims: tuple[int, int, int],
    frame_count: int,
    image_size: tuple[int, int],
    footprint: tuple[int, int] | None = None,
) -> FeatureVolume:
    """Paste the feature patch at per-frame trajectory positions on a blank
    background, then compress time to the latent frame count.

    latent_dims: (n, h, w). footprint: pasted (height, width) in latent cells;
    defaults to the patch's own size. The footprint stays constant over time.
    """
    patch = np.asarray(patch, dtype=np.float32)
    n, h, w = latent_dims
    if patch.ndim != 3:
        raise DimMismatch(f"patch must be C x p x p, got {patch.shape}")
    if len(traj) != frame_count:
        raise DimMismatch(f"trajectory length {len(traj)} != frame count {frame_count}")
    if patch.shape[1] > min(h, w) or patch.shape[2] > min(h, w):
        raise DimMismatch(f"patch {patch.shape} exceeds latent grid {h}x{w}")
    W, H = image_size
    fh, fw = footprint if footprint is not None else (patch.shape[1], patch.shape[2])
    fh = int(np.clip(fh, 1, h))
    fw = int(np.clip(fw, 1, w))
    resized = resize_bilinear(patch, fh, fw)

    volume = np.zeros((patch.shape[0], frame_count, h, w), dtype=np.float32)
    for i, (x, y, _) in enumerate(traj.points):
        cx = x * w / W
        cy = y * h / H
        x0 = int(np.floor(cx - fw / 2.0 + 0.5))
        y0 = int(np.floor(cy - fh / 2.0 + 0.5))
        sx0 = max(-x0, 0)
        sy0 = max(-y0, 0)
        dx0 = max(x0, 0)
        dy0 = max(y0, 0)
        dx1 = min(x0 + fw, w)
        dy1 = min(y0 + fh, h)
        if dx0 >= dx1 or dy0 >= dy1:
            continue
        volume[:, i, dy0:dy1, dx0:dx1] = resized[
            :, sy0 : sy0 + (dy1 - dy0), sx0 : sx0 + (dx1 - dx0)
        ]
    return FeatureVolume(values=temporal_interpolate(volume, n))
