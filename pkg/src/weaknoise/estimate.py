"""Receivers ``g_n: R^n -> [0,1]^d`` with an explicit outage flag."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .modulate import Codebook, ModulatorSpec, cell_centers, modulate_many

# codewords per distance block; bounds memory at (trials x _CHUNK) floats
_CHUNK = 4096


@dataclass(frozen=True)
class EstimateOutcome:
    u_hat: np.ndarray
    outage: bool
    decoded_message: int | None = None


def nearest_codeword(Y, codebook: Codebook) -> np.ndarray:
    """Minimum-distance (ML) decisions for each row of ``Y``; ties go to the smallest id.

    Uses ``|c|^2 - 2 <y, c>``, the part of the squared distance that depends
    on the codeword.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    C = codebook.codewords
    best = np.full(Y.shape[0], np.inf)
    arg = np.zeros(Y.shape[0], dtype=np.int64)
    for lo in range(0, C.shape[0], _CHUNK):
        block = C[lo:lo + _CHUNK]
        metric = codebook.sqnorms[None, lo:lo + _CHUNK] - 2.0 * (Y @ block.T)
        j = np.argmin(metric, axis=1)
        m = metric[np.arange(len(j)), j]
        better = m < best
        best[better] = m[better]
        arg[better] = j[better] + lo
    return arg


def decode_dequantize(y, codebook: Codebook, true_message: int) -> EstimateOutcome:
    """Decode to the nearest codeword and return its cell center.

    ``true_message`` only labels the outage; it never touches the estimate.
    """
    m = int(nearest_codeword(y, codebook)[0])
    u_hat = cell_centers(codebook.index_tuple(m), codebook.levels)
    return EstimateOutcome(u_hat, m != true_message, m)


def dequantize_many(messages, codebook: Codebook) -> np.ndarray:
    return cell_centers(codebook.index_tuple(np.asarray(messages)), codebook.levels)


def ml_grid_estimate_many(Y, spec: ModulatorSpec, probe_grid) -> np.ndarray:
    """Grid ML estimates for each row of ``Y``; ties go to the earliest grid point."""
    grid = np.asarray(probe_grid, dtype=float)
    if grid.ndim == 1:
        grid = grid[:, None]
    if len(grid) == 0:
        raise ValueError("probe grid is empty")
    pseudo = Codebook(modulate_many(spec, grid), spec.P)
    return grid[nearest_codeword(Y, pseudo)]


def ml_grid_estimate(y, spec: ModulatorSpec, probe_grid) -> np.ndarray:
    return ml_grid_estimate_many(np.atleast_2d(y), spec, probe_grid)[0]


def linear_correlator_estimate_many(Y, P: float, s_hat) -> np.ndarray:
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    n = Y.shape[1]
    u = (Y @ np.asarray(s_hat, dtype=float) / math.sqrt(n * P) + 1.0) / 2.0
    return np.clip(u, 0.0, 1.0)[:, None]


def linear_correlator_estimate(y, P: float, s_hat) -> np.ndarray:
    """ML estimate for the linear modulator ``(2u - 1) sqrt(nP) s_hat``, clamped to [0, 1]."""
    s_hat = np.asarray(s_hat, dtype=float)
    if not math.isclose(float(s_hat @ s_hat), 1.0, rel_tol=1e-9):
        raise ValueError("s_hat must be a unit vector")
    return linear_correlator_estimate_many(y, P, s_hat)[0]
