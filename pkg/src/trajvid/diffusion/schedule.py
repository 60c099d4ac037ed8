"""Linear-beta noise schedule and the forward (noising) process."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DimMismatch


@dataclass(frozen=True)
class NoiseSchedule:
    T: int = 1000
    beta_start: float = 1e-4
    beta_end: float = 2e-2
    betas: np.ndarray = field(init=False, repr=False)
    alphas: np.ndarray = field(init=False, repr=False)
    alpha_bars: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.T < 2:
            raise DimMismatch("schedule needs at least 2 steps")
        betas = np.linspace(self.beta_start, self.beta_end, self.T, dtype=np.float64)
        alphas = 1.0 - betas
        object.__setattr__(self, "betas", betas)
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "alpha_bars", np.cumprod(alphas))
        if not (betas[0] > 0 and betas[-1] < 1 and np.all(np.diff(betas) > 0)):
            raise DimMismatch("betas must be strictly increasing within (0, 1)")

    def sqrt_alpha_bar(self, t):
        return np.sqrt(self.alpha_bars[t])

    def sqrt_one_minus_alpha_bar(self, t):
        return np.sqrt(1.0 - self.alpha_bars[t])


def add_noise(z0, eps, t: int, schedule: NoiseSchedule):
    """z_t = sqrt(a_bar_t) z0 + sqrt(1 - a_bar_t) eps, elementwise.

    Applies to whatever latent stack it is given (the caller noises RGB and
    DEPTH jointly with the same t; the reference latent never passes through
    here).
    """
    if not (0 <= t < schedule.T):
        raise DimMismatch(f"t={t} outside [0, {schedule.T})")
    if z0.shape != eps.shape:
        raise DimMismatch(f"z0 {z0.shape} and eps {eps.shape} disagree")
    a = schedule.sqrt_alpha_bar(t)
    b = schedule.sqrt_one_minus_alpha_bar(t)
    return a * z0 + b * eps
