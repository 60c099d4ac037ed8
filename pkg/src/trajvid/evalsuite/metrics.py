"""Pixel metrics: trajectory error, PSNR, and SSIM on unit-range videos."""
from __future__ import annotations

import numpy as np

from ..errors import DimMismatch
from ..trajrep.trajectory import Trajectory

PSNR_CAP_DB = 100.0


def trajectory_error(q_in: Trajectory, q_gen: Trajectory) -> float:
    """Mean per-frame L1 pixel distance |dx| + |dy|; depth is not scored."""
    if len(q_in) != len(q_gen):
        raise DimMismatch(f"trajectory lengths differ: {len(q_in)} vs {len(q_gen)}")
    a = q_in.xy
    b = q_gen.xy
    return float(np.abs(a - b).sum(axis=1).mean())


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """10 log10(1 / MSE) for unit dynamic range, capped at 100 dB."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimMismatch(f"shapes differ: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse < 1e-10:
        return PSNR_CAP_DB
    return float(10.0 * np.log10(1.0 / mse))


def _gaussian_window(size: int = 7, sigma: float = 1.5) -> np.ndarray:
    r = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(r**2) / (2 * sigma**2))
    g /= g.sum()
    return g


def _filter2_valid(img: np.ndarray, kernel1d: np.ndarray) -> np.ndarray:
    """Separable 'valid' convolution with a symmetric 1-D kernel."""
    k = len(kernel1d)
    H, W = img.shape
    out = np.zeros((H - k + 1, W), dtype=np.float64)
    for i, kv in enumerate(kernel1d):
        out += kv * img[i : i + H - k + 1]
    out2 = np.zeros((H - k + 1, W - k + 1), dtype=np.float64)
    for i, kv in enumerate(kernel1d):
        out2 += kv * out[:, i : i + W - k + 1]
    return out2


def ssim(a: np.ndarray, b: np.ndarray, window: int = 7, sigma: float = 1.5) -> float:
    """Mean local SSIM with a Gaussian window, unit dynamic range constants.

    Accepts single frames (H x W), videos (N x H x W), or channel videos
    (N x C x H x W); frames and channels are averaged.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimMismatch(f"shapes differ: {a.shape} vs {b.shape}")
    if a.ndim == 2:
        frames = [(a, b)]
    else:
        frames = [(x, y) for x, y in zip(a.reshape(-1, *a.shape[-2:]), b.reshape(-1, *b.shape[-2:]))]
    C1 = (0.01 * 1.0) ** 2
    C2 = (0.03 * 1.0) ** 2
    g = _gaussian_window(window, sigma)
    vals = []
    for x, y in frames:
        mu_x = _filter2_valid(x, g)
        mu_y = _filter2_valid(y, g)
        xx = _filter2_valid(x * x, g) - mu_x**2
        yy = _filter2_valid(y * y, g) - mu_y**2
        xy = _filter2_valid(x * y, g) - mu_x * mu_y
        num = (2 * mu_x * mu_y + C1) * (2 * xy + C2)
        den = (mu_x**2 + mu_y**2 + C1) * (xx + yy + C2)
        vals.append(float(np.mean(num / den)))
    return float(np.mean(vals))
