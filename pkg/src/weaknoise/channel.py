"""Seeded discrete-time AWGN channel ``y = x + z``.

The noise vector for a given ``(seed, stream, draw)`` never changes, no
matter how many other draws were taken before or by whom. See
:mod:`weaknoise.rng` for the generator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .errors import ZeroVariance


@dataclass(frozen=True)
class NoiseModel:
    sigma2: float
    seed: int = 0
    stream: int = 0

    def __post_init__(self):
        if not self.sigma2 >= 0:
            raise ValueError("noise variance must be nonnegative")

    def noise(self, draws, n: int) -> np.ndarray:
        """Noise vectors for the given draw indices, shape ``(len(draws), n)``."""
        z = rng.standard_normals(self.seed, self.stream, draws, n)
        return math.sqrt(self.sigma2) * z


def transmit(x, noise: NoiseModel, draw: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("channel input must be finite")
    if noise.sigma2 == 0:
        return x.copy()
    return x + noise.noise([draw], x.shape[-1])[0]


def transmit_many(x, noise: NoiseModel, draws) -> np.ndarray:
    """Send ``x`` once per draw index; row k is identical to ``transmit(x, noise, draws[k])``."""
    x = np.asarray(x, dtype=float)
    draws = np.atleast_1d(draws)
    if noise.sigma2 == 0:
        return np.broadcast_to(x, (draws.size, x.size)).copy()
    return x[None, :] + noise.noise(draws, x.size)


def log_density(z, noise: NoiseModel) -> float:
    """Log of the N(0, sigma2 I) density at ``z``."""
    if noise.sigma2 <= 0:
        raise ZeroVariance("log density needs sigma2 > 0")
    z = np.asarray(z, dtype=float)
    n = z.shape[-1]
    return -0.5 * n * math.log(2 * math.pi * noise.sigma2) - np.sum(z * z, axis=-1) / (2 * noise.sigma2)
